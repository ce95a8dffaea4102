//! Reference values computed once with 40-digit arbitrary-precision
//! arithmetic and frozen here. The Caputo integral of `t^n` was evaluated
//! by quadrature after the substitution `u = (t − s)^(1−α)`, which removes
//! the endpoint singularity. Mittag-Leffler values are partial sums of the
//! defining series.

#![allow(dead_code, clippy::excessive_precision)]

/// `(n, α, t, D^α t^n)`.
pub const POWER_TERM_CASES: [(u32, f64, f64, f64); 50] = [
    (5, 0.787058, 0.708291, 0.84428624162013939854),
    (2, 0.379024, 1.526529, 2.7333992573091508695),
    (3, 0.351191, 0.501623, 0.24551337295764061406),
    (6, 0.323839, 1.208876, 5.3388454159310063394),
    (1, 0.416343, 1.510305, 1.4264447570834822518),
    (6, 0.591559, 0.40427, 0.021968856080123429666),
    (1, 0.232674, 0.056485, 0.11941779792355341453),
    (3, 0.320989, 0.859393, 0.98232640030905817041),
    (2, 0.786417, 0.951463, 1.6961698285983622519),
    (6, 0.707159, 0.780087, 0.97046600316445272481),
    (2, 0.820262, 0.158746, 0.2092682244124891908),
    (6, 0.56428, 0.772221, 0.68835083158704795179),
    (4, 0.255623, 0.474943, 0.089789470743696795919),
    (2, 0.891634, 1.388685, 2.7389316566997222642),
    (6, 0.816556, 0.108963, 0.000044741067462437911087),
    (6, 0.516929, 0.754619, 0.55062632089616019218),
    (6, 0.423575, 1.448196, 17.188429800864019823),
    (3, 0.760523, 0.166518, 0.042939495388709213815),
    (5, 0.592973, 1.383805, 11.135789971615666147),
    (1, 0.767872, 1.934568, 1.2804247476346587908),
    (3, 0.692372, 1.466558, 5.367647091744551109),
    (6, 0.237602, 1.066802, 2.2551517143086521755),
    (1, 0.350991, 1.106891, 1.1868552368211724839),
    (2, 0.273488, 0.750806, 0.77276029822578865679),
    (5, 0.703608, 0.880565, 1.8350205566117895065),
    (1, 0.546124, 0.334711, 0.68707994000544481908),
    (1, 0.718751, 1.748135, 1.2993875912891004923),
    (3, 0.058884, 1.47978, 3.4078257051589230821),
    (3, 0.609744, 1.256376, 3.5091312059052758225),
    (1, 0.264633, 1.900094, 1.7506284382736049389),
    (3, 0.445012, 0.783038, 0.90914129499823469052),
    (1, 0.308591, 0.358188, 0.54210381714879879665),
    (5, 0.672497, 0.412, 0.065040261849482507825),
    (3, 0.610328, 1.496778, 5.3347912131451778044),
    (5, 0.859774, 1.909112, 58.751430715019054981),
    (6, 0.450818, 1.526983, 23.980583322140788816),
    (3, 0.656364, 1.630193, 6.716060315197594322),
    (4, 0.384305, 0.858681, 1.01116545005723428),
    (6, 0.308943, 0.754023, 0.35500184717290230706),
    (2, 0.200421, 0.679567, 0.59548555104563235573),
    (4, 0.743853, 1.502246, 10.811116985529235462),
    (1, 0.362023, 0.670775, 0.86280567022029528321),
    (3, 0.121474, 1.990893, 8.4365390083910814206),
    (4, 0.565579, 1.102761, 3.1607367649622943231),
    (6, 0.318789, 1.581077, 24.329485305580816055),
    (4, 0.683839, 0.366789, 0.095309337200150424942),
    (1, 0.843171, 1.744935, 1.1723426783532414003),
    (5, 0.249636, 1.469267, 9.4682006258002370098),
    (4, 0.384435, 0.426223, 0.080366331566790645583),
    (4, 0.763584, 1.659035, 15.179677843573450456),
];

/// Forcing `g(t)` for `u = 0.1 + 0.5t + 0.3t² − 0.2t³` under
/// `D^(0.3+0.4t) u + (1 + t) D^0.6 u = g(t) − u`.
pub const MANUFACTURED_FORCING: [(f64, f64); 10] = [
    (0.1, 0.54839779280382750615),
    (0.2, 0.84795454866779867162),
    (0.3, 1.1392768859008333891),
    (0.4, 1.4235593782399423204),
    (0.5, 1.6954560534431896193),
    (0.6, 1.9479208884957640637),
    (0.7, 2.1733912347810884855),
    (0.8, 2.3642305530448768365),
    (0.9, 2.5129391823720796004),
    (1.0, 2.6122685391563734243),
];

pub const MANUFACTURED_COEFFS: [f64; 4] = [0.0, 0.5, 0.3, -0.2];
pub const MANUFACTURED_U0: f64 = 0.1;

/// `E_α(−1)`.
pub const MITTAG_LEFFLER_AT_MINUS_ONE: [(f64, f64); 3] = [
    (0.3, 0.45659440832969066901),
    (0.5, 0.42758357615580700441),
    (0.8, 0.38694857861897685146),
];
