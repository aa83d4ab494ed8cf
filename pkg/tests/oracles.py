"""Reference values computed once with mpmath at 30-40 digits and frozen here.

Closed forms are evaluated with mpmath.hyp1f1 / hyperu / gamma; the norm of
v_inf uses mpmath.quad after the substitution s = r^(1-2B) that removes the
r^(-2B) singularity of the integrand at the origin.
"""

GAMMA = {
    -0.3: -4.3268511088251926189,
    -1.5: 2.3632718012073547031,
    -2.7: -0.93108278483896378099,
    0.43588989435406728: 2.0323697561452992038,
    -0.87177978870813456: -8.4145091061593717538,
    4.25: 8.2850851418352201659,
}

B09 = 0.43588989435406736

# (a, b, x, M(a,b,x), U(a,b,x)) at nu = 0.9
HYPERGEOMETRIC = [
    (-B09, 1 - 2 * B09, 1e-6, 0.9999966004579236392, 0.53755606279154375499),
    (-B09, 1 - 2 * B09, 0.5, -0.94118249792514075329, 0.93306575010013708102),
    (-B09, 1 - 2 * B09, 3.0, -28.974459012592968838, 1.7062886676278474038),
    (-B09, 1 - 2 * B09, 20.0, -189631419.54602125046, 3.7250674021948682308),
    (-B09, 1 - 2 * B09, 60.0, -2.330286202998996343e+25, 5.9764348397970208821),
    (1 - B09, 2 - 2 * B09, 1e-6, 1.0000005000001837346, 23.144032778017157035),
    (1 - B09, 2 - 2 * B09, 0.5, 1.3029510549003839237, 1.1721142713995745709),
    (1 - B09, 2 - 2 * B09, 3.0, 7.1940127270279411196, 0.50439239369737556655),
    (1 - B09, 2 - 2 * B09, 20.0, 54073109.508394525997, 0.18238083370402964285),
    (1 - B09, 2 - 2 * B09, 60.0, 6.7886355809551715475e+24, 0.098895330046684194152),
    (B09, 1 + 2 * B09, 1e-6, 1.0000002328746180273, 91432.900425687911383),
    (B09, 1 + 2 * B09, 0.5, 1.1326635099116897678, 1.7074347427073340825),
    (B09, 1 + 2 * B09, 3.0, 2.8526150148577083704, 0.65479874713192412552),
    (B09, 1 + 2 * B09, 20.0, 3219016.6894657367933, 0.27347805383799610296),
    (B09, 1 + 2 * B09, 60.0, 1.5180200703751675987e+23, 0.16837820192345805939),
    (B09, 2 * B09, 1e-6, 1.0000005000001917814, 3.9365680919906247888),
    (B09, 2 * B09, 0.5, 1.3055493236119076592, 1.0724370866661569778),
    (B09, 2 * B09, 3.0, 7.5925724282177029291, 0.58069102911245900917),
    (B09, 2 * B09, 20.0, 71587595.120879982363, 0.26779196225733166256),
    (B09, 2 * B09, 60.0, 1.034702533092476099e+25, 0.16717476185972943651),
]

# kappa = +1 constants: Wronskian, r^B coefficients q, r^-B coefficients of
# v_inf, squared norm of v_inf, p = r^B coefficients of S_D^-1 Phi, c_nu
CONSTANTS = {
    0.88: dict(W=6.2140546494307401769,
               q=(8.30753426925232829, -13.924311842918223537),
               c_inf=(0.69292472111722690444, -0.41341331130997153316),
               vinf_norm_sq=14.43642120088929,
               p=(-19.299969282171556, 32.348803162732618),
               c_nu=-27.852909116957953, d_nu=11.989086283222510138),
    0.9: dict(W=2.0985478772479404288,
              q=(3.2782466815249264247, -5.2302236457793316606),
              c_inf=(0.66086532418551406976, -0.41422311982669318674),
              vinf_norm_sq=6.0258790352475244,
              p=(-9.4133272653644954, 15.018334991760541),
              c_nu=-14.243941875700599, d_nu=4.9605366805486636138),
    0.95: dict(W=0.44382488192248988215,
               q=(1.1628658701866547084, -1.6062848650239244414),
               c_inf=(0.58059504314475719627, -0.42032031476716334668),
               vinf_norm_sq=2.3079535694679941,
               p=(-6.0470706921260534, 8.3529135900537836),
               c_nu=-10.415298517487281, d_nu=2.002886321398928134),
}

# closed-form solutions at nu = 0.9, kappa = +1: r -> (v_inf, v0)
SOLUTIONS_09 = {
    0.01: ((5.1172974077888964384, -3.4011487434986002216),
           (0.43667252588985135713, -0.7003181180253199768)),
    1.0: ((0.55769412186201586194, -0.51940835085057349673),
          (1.041331270505593364, -4.7327449432996298559)),
    7.0: ((0.0012581977906489014645, -0.0012414795212443160997),
          (-715.39074520252755816, -962.01481705594091655)),
}
