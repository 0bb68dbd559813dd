// Dormand-Prince 8(5,3) with the 7th-order continuous extension.
// Coefficients from Hairer, Norsett & Wanner, "Solving Ordinary Differential
// Equations I", 2nd ed., and the reference DOP853 code.

#include "cavity/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cavity {

namespace {

constexpr double uround = 2.220446049250313e-16;

constexpr double c2 = 0.526001519587677318785587544488e-01;
constexpr double c3 = 0.789002279381515978178381316732e-01;
constexpr double c4 = 0.118350341907227396726757197510e+00;
constexpr double c5 = 0.281649658092772603273242802490e+00;
constexpr double c6 = 0.333333333333333333333333333333e+00;
constexpr double c7 = 0.25e+00;
constexpr double c8 = 0.307692307692307692307692307692e+00;
constexpr double c9 = 0.651282051282051282051282051282e+00;
constexpr double c10 = 0.6e+00;
constexpr double c11 = 0.857142857142857142857142857142e+00;
constexpr double c14 = 0.1e+00;
constexpr double c15 = 0.2e+00;
constexpr double c16 = 0.777777777777777777777777777778e+00;

constexpr double a21 = 5.26001519587677318785587544488e-2;
constexpr double a31 = 1.97250569845378994544595329183e-2;
constexpr double a32 = 5.91751709536136983633785987549e-2;
constexpr double a41 = 2.95875854768068491816892993775e-2;
constexpr double a43 = 8.87627564304205475450678981324e-2;
constexpr double a51 = 2.41365134159266685502369798665e-1;
constexpr double a53 = -8.84549479328286085344864962717e-1;
constexpr double a54 = 9.24834003261792003115737966543e-1;
constexpr double a61 = 3.7037037037037037037037037037e-2;
constexpr double a64 = 1.70828608729473871279604482173e-1;
constexpr double a65 = 1.25467687566822425016691814123e-1;
constexpr double a71 = 3.7109375e-2;
constexpr double a74 = 1.70252211019544039314978060272e-1;
constexpr double a75 = 6.02165389804559606850219397283e-2;
constexpr double a76 = -1.7578125e-2;
constexpr double a81 = 3.70920001185047927108779319836e-2;
constexpr double a84 = 1.70383925712239993810214054705e-1;
constexpr double a85 = 1.07262030446373284651809199168e-1;
constexpr double a86 = -1.53194377486244017527936158236e-2;
constexpr double a87 = 8.27378916381402288758473766002e-3;
constexpr double a91 = 6.24110958716075717114429577812e-1;
constexpr double a94 = -3.36089262944694129406857109825e0;
constexpr double a95 = -8.68219346841726006818189891453e-1;
constexpr double a96 = 2.75920996994467083049415600797e1;
constexpr double a97 = 2.01540675504778934086186788979e1;
constexpr double a98 = -4.34898841810699588477366255144e1;
constexpr double a101 = 4.77662536438264365890433908527e-1;
constexpr double a104 = -2.48811461997166764192642586468e0;
constexpr double a105 = -5.90290826836842996371446475743e-1;
constexpr double a106 = 2.12300514481811942347288949897e1;
constexpr double a107 = 1.52792336328824235832596922938e1;
constexpr double a108 = -3.32882109689848629194453265587e1;
constexpr double a109 = -2.03312017085086261358222928593e-2;
constexpr double a111 = -9.3714243008598732571704021658e-1;
constexpr double a114 = 5.18637242884406370830023853209e0;
constexpr double a115 = 1.09143734899672957818500254654e0;
constexpr double a116 = -8.14978701074692612513997267357e0;
constexpr double a117 = -1.85200656599969598641566180701e1;
constexpr double a118 = 2.27394870993505042818970056734e1;
constexpr double a119 = 2.49360555267965238987089396762e0;
constexpr double a1110 = -3.0467644718982195003823669022e0;
constexpr double a121 = 2.27331014751653820792359768449e0;
constexpr double a124 = -1.05344954667372501984066689879e1;
constexpr double a125 = -2.00087205822486249909675718444e0;
constexpr double a126 = -1.79589318631187989172765950534e1;
constexpr double a127 = 2.79488845294199600508499808837e1;
constexpr double a128 = -2.85899827713502369474065508674e0;
constexpr double a129 = -8.87285693353062954433549289258e0;
constexpr double a1210 = 1.23605671757943030647266201528e1;
constexpr double a1211 = 6.43392746015763530355970484046e-1;

constexpr double a141 = 5.61675022830479523392909219681e-2;
constexpr double a147 = 2.53500210216624811088794765333e-1;
constexpr double a148 = -2.46239037470802489917441475441e-1;
constexpr double a149 = -1.24191423263816360469010140626e-1;
constexpr double a1410 = 1.5329179827876569731206322685e-1;
constexpr double a1411 = 8.20105229563468988491666602057e-3;
constexpr double a1412 = 7.56789766054569976138603589584e-3;
constexpr double a1413 = -8.298e-3;
constexpr double a151 = 3.18346481635021405060768473261e-2;
constexpr double a156 = 2.83009096723667755288322961402e-2;
constexpr double a157 = 5.35419883074385676223797384372e-2;
constexpr double a158 = -5.49237485713909884646569340306e-2;
constexpr double a1511 = -1.08347328697249322858509316994e-4;
constexpr double a1512 = 3.82571090835658412954920192323e-4;
constexpr double a1513 = -3.40465008687404560802977114492e-4;
constexpr double a1514 = 1.41312443674632500278074618366e-1;
constexpr double a161 = -4.28896301583791923408573538692e-1;
constexpr double a166 = -4.69762141536116384314449447206e0;
constexpr double a167 = 7.68342119606259904184240953878e0;
constexpr double a168 = 4.06898981839711007970213554331e0;
constexpr double a169 = 3.56727187455281109270669543021e-1;
constexpr double a1613 = -1.39902416515901462129418009734e-3;
constexpr double a1614 = 2.9475147891527723389556272149e0;
constexpr double a1615 = -9.15095847217987001081870187138e0;

constexpr double b1 = 5.42937341165687622380535766363e-2;
constexpr double b6 = 4.45031289275240888144113950566e0;
constexpr double b7 = 1.89151789931450038304281599044e0;
constexpr double b8 = -5.8012039600105847814672114227e0;
constexpr double b9 = 3.1116436695781989440891606237e-1;
constexpr double b10 = -1.52160949662516078556178806805e-1;
constexpr double b11 = 2.01365400804030348374776537501e-1;
constexpr double b12 = 4.47106157277725905176885569043e-2;

constexpr double bhh1 = 0.244094488188976377952755905512e+00;
constexpr double bhh2 = 0.733846688281611857341361741547e+00;
constexpr double bhh3 = 0.220588235294117647058823529412e-01;

constexpr double er1 = 0.1312004499419488073250102996e-01;
constexpr double er6 = -0.1225156446376204440720569753e+01;
constexpr double er7 = -0.4957589496572501915214079952e+00;
constexpr double er8 = 0.1664377182454986536961530415e+01;
constexpr double er9 = -0.3503288487499736816886487290e+00;
constexpr double er10 = 0.3341791187130174790297318841e+00;
constexpr double er11 = 0.8192320648511571246570742613e-01;
constexpr double er12 = -0.2235530786388629525884427845e-01;

constexpr double d41 = -0.84289382761090128651353491142e+01;
constexpr double d46 = 0.56671495351937776962531783590e+00;
constexpr double d47 = -0.30689499459498916912797304727e+01;
constexpr double d48 = 0.23846676565120698287728149680e+01;
constexpr double d49 = 0.21170345824450282767155149946e+01;
constexpr double d410 = -0.87139158377797299206789907490e+00;
constexpr double d411 = 0.22404374302607882758541771650e+01;
constexpr double d412 = 0.63157877876946881815570249290e+00;
constexpr double d413 = -0.88990336451333310820698117400e-01;
constexpr double d414 = 0.18148505520854727256656404962e+02;
constexpr double d415 = -0.91946323924783554000451984436e+01;
constexpr double d416 = -0.44360363875948939664310572000e+01;
constexpr double d51 = 0.10427508642579134603413151009e+02;
constexpr double d56 = 0.24228349177525818288430175319e+03;
constexpr double d57 = 0.16520045171727028198505394887e+03;
constexpr double d58 = -0.37454675472269020279518312152e+03;
constexpr double d59 = -0.22113666853125306036270938578e+02;
constexpr double d510 = 0.77334326684722638389603898808e+01;
constexpr double d511 = -0.30674084731089398182061213626e+02;
constexpr double d512 = -0.93321305264302278729567221706e+01;
constexpr double d513 = 0.15697238121770843886131091075e+02;
constexpr double d514 = -0.31139403219565177677282850411e+02;
constexpr double d515 = -0.93529243588444783865713862664e+01;
constexpr double d516 = 0.35816841486394083752465898540e+02;
constexpr double d61 = 0.19985053242002433820987653617e+02;
constexpr double d66 = -0.38703730874935176555105901742e+03;
constexpr double d67 = -0.18917813819516756882830838328e+03;
constexpr double d68 = 0.52780815920542364900561016686e+03;
constexpr double d69 = -0.11573902539959630126141871134e+02;
constexpr double d610 = 0.68812326946963000169666922661e+01;
constexpr double d611 = -0.10006050966910838403183860980e+01;
constexpr double d612 = 0.77771377980534432092869265740e+00;
constexpr double d613 = -0.27782057523535084065932004339e+01;
constexpr double d614 = -0.60196695231264120758267380846e+02;
constexpr double d615 = 0.84320405506677161018159903784e+02;
constexpr double d616 = 0.11992291136182789328035130030e+02;
constexpr double d71 = -0.25693933462703749003312586129e+02;
constexpr double d76 = -0.15418974869023643374053993627e+03;
constexpr double d77 = -0.23152937917604549567536039109e+03;
constexpr double d78 = 0.35763911791061412378285349910e+03;
constexpr double d79 = 0.93405324183624310003907691704e+02;
constexpr double d710 = -0.37458323136451633156875139351e+02;
constexpr double d711 = 0.10409964950896230045147246184e+03;
constexpr double d712 = 0.29840293426660503123344363579e+02;
constexpr double d713 = -0.43533456590011143754432175058e+02;
constexpr double d714 = 0.96324553959188282948394950600e+02;
constexpr double d715 = -0.39177261675615439165231486172e+02;
constexpr double d716 = -0.14972683625798562581422125276e+03;

// step-size control, reference defaults
constexpr double safe = 0.9;
constexpr double fac_min = 0.333;
constexpr double fac_max = 6.0;
constexpr double expo = 1.0 / 8.0;

}  // namespace

Dop853::Dop853(RhsFunction rhs, std::size_t dimension, double rel_tol, double abs_tol,
               double max_step)
    : rhs_(std::move(rhs)), n_(dimension), rtol_(rel_tol), atol_(abs_tol), max_step_(max_step) {
    if (n_ == 0) throw std::invalid_argument("Dop853: dimension must be positive");
    if (!(rtol_ > 0.0) || !(atol_ > 0.0)) {
        throw std::invalid_argument("Dop853: tolerances must be positive");
    }
    if (!(max_step_ > 0.0)) throw std::invalid_argument("Dop853: max_step must be positive");
    for (auto* v : {&y_, &y_old_, &f_, &f_old_, &y_new_, &ytmp_, &k2_, &k3_, &k4_, &k5_, &k6_,
                    &k7_, &k8_, &k9_, &k10_, &rc1_, &rc2_, &rc3_, &rc4_, &rc5_, &rc6_, &rc7_,
                    &rc8_, &k14_, &k15_, &k16_}) {
        v->assign(n_, 0.0);
    }
}

void Dop853::eval(double t, std::span<const double> y, std::span<double> dy) {
    ++evaluations_;
    rhs_(t, y, dy);
}

void Dop853::reset(double t, std::span<const double> y, double h_guess) {
    if (y.size() != n_) throw std::invalid_argument("Dop853::reset: dimension mismatch");
    std::copy(y.begin(), y.end(), y_.begin());
    std::copy(y.begin(), y.end(), y_old_.begin());
    t_ = t;
    t_old_ = t;
    dense_ready_ = false;
    last_rejected_ = false;
    eval(t_, y_, f_);
    h_next_ = h_guess > 0.0 ? std::min(h_guess, max_step_) : initial_step();
}

double Dop853::initial_step() {
    double dnf = 0.0;
    double dny = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
        const double sk = atol_ + rtol_ * std::abs(y_[i]);
        dnf += (f_[i] / sk) * (f_[i] / sk);
        dny += (y_[i] / sk) * (y_[i] / sk);
    }
    double h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : std::sqrt(dny / dnf) * 0.01;
    h = std::min(h, max_step_);
    for (std::size_t i = 0; i < n_; ++i) ytmp_[i] = y_[i] + h * f_[i];
    eval(t_ + h, ytmp_, k2_);
    double der2 = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
        const double sk = atol_ + rtol_ * std::abs(y_[i]);
        const double d = (k2_[i] - f_[i]) / sk;
        der2 += d * d;
    }
    der2 = std::sqrt(der2) / h;
    const double der12 = std::max(std::abs(der2), std::sqrt(dnf));
    const double h1 = der12 <= 1e-15 ? std::max(1e-6, h * 1e-3) : std::pow(0.01 / der12, 1.0 / 8.0);
    return std::min({100.0 * h, h1, max_step_});
}

Dop853::StepOutcome Dop853::step(double t_limit) {
    double h = std::min(h_next_, max_step_);
    for (;;) {
        if (0.1 * h <= std::abs(t_) * uround || h < 1e-300) {
            return StepOutcome::step_underflow;
        }
        bool reaches_limit = false;
        if (t_ + 1.01 * h >= t_limit) {
            h = t_limit - t_;
            reaches_limit = true;
            if (!(h > 0.0)) return StepOutcome::step_underflow;
        }

        const std::size_t n = n_;
        const double* y = y_.data();
        const double* k1 = f_.data();
        double* yt = ytmp_.data();

        for (std::size_t i = 0; i < n; ++i) yt[i] = y[i] + h * a21 * k1[i];
        eval(t_ + c2 * h, ytmp_, k2_);
        for (std::size_t i = 0; i < n; ++i) yt[i] = y[i] + h * (a31 * k1[i] + a32 * k2_[i]);
        eval(t_ + c3 * h, ytmp_, k3_);
        for (std::size_t i = 0; i < n; ++i) yt[i] = y[i] + h * (a41 * k1[i] + a43 * k3_[i]);
        eval(t_ + c4 * h, ytmp_, k4_);
        for (std::size_t i = 0; i < n; ++i)
            yt[i] = y[i] + h * (a51 * k1[i] + a53 * k3_[i] + a54 * k4_[i]);
        eval(t_ + c5 * h, ytmp_, k5_);
        for (std::size_t i = 0; i < n; ++i)
            yt[i] = y[i] + h * (a61 * k1[i] + a64 * k4_[i] + a65 * k5_[i]);
        eval(t_ + c6 * h, ytmp_, k6_);
        for (std::size_t i = 0; i < n; ++i)
            yt[i] = y[i] + h * (a71 * k1[i] + a74 * k4_[i] + a75 * k5_[i] + a76 * k6_[i]);
        eval(t_ + c7 * h, ytmp_, k7_);
        for (std::size_t i = 0; i < n; ++i)
            yt[i] = y[i] + h * (a81 * k1[i] + a84 * k4_[i] + a85 * k5_[i] + a86 * k6_[i] +
                                a87 * k7_[i]);
        eval(t_ + c8 * h, ytmp_, k8_);
        for (std::size_t i = 0; i < n; ++i)
            yt[i] = y[i] + h * (a91 * k1[i] + a94 * k4_[i] + a95 * k5_[i] + a96 * k6_[i] +
                                a97 * k7_[i] + a98 * k8_[i]);
        eval(t_ + c9 * h, ytmp_, k9_);
        for (std::size_t i = 0; i < n; ++i)
            yt[i] = y[i] + h * (a101 * k1[i] + a104 * k4_[i] + a105 * k5_[i] + a106 * k6_[i] +
                                a107 * k7_[i] + a108 * k8_[i] + a109 * k9_[i]);
        eval(t_ + c10 * h, ytmp_, k10_);
        // stage 11 goes to k2, stage 12 to k3
        for (std::size_t i = 0; i < n; ++i)
            yt[i] = y[i] + h * (a111 * k1[i] + a114 * k4_[i] + a115 * k5_[i] + a116 * k6_[i] +
                                a117 * k7_[i] + a118 * k8_[i] + a119 * k9_[i] + a1110 * k10_[i]);
        eval(t_ + c11 * h, ytmp_, k2_);
        for (std::size_t i = 0; i < n; ++i)
            yt[i] = y[i] + h * (a121 * k1[i] + a124 * k4_[i] + a125 * k5_[i] + a126 * k6_[i] +
                                a127 * k7_[i] + a128 * k8_[i] + a129 * k9_[i] +
                                a1210 * k10_[i] + a1211 * k2_[i]);
        const double t_new = reaches_limit ? t_limit : t_ + h;
        eval(t_new, ytmp_, k3_);

        double err5 = 0.0;
        double err3 = 0.0;
        bool finite = true;
        for (std::size_t i = 0; i < n; ++i) {
            k4_[i] = b1 * k1[i] + b6 * k6_[i] + b7 * k7_[i] + b8 * k8_[i] + b9 * k9_[i] +
                     b10 * k10_[i] + b11 * k2_[i] + b12 * k3_[i];
            y_new_[i] = y[i] + h * k4_[i];
            finite = finite && std::isfinite(y_new_[i]);
            const double sk = atol_ + rtol_ * std::max(std::abs(y[i]), std::abs(y_new_[i]));
            const double e3 = (k4_[i] - bhh1 * k1[i] - bhh2 * k9_[i] - bhh3 * k3_[i]) / sk;
            const double e5 = (er1 * k1[i] + er6 * k6_[i] + er7 * k7_[i] + er8 * k8_[i] +
                               er9 * k9_[i] + er10 * k10_[i] + er11 * k2_[i] + er12 * k3_[i]) /
                              sk;
            // worst component rather than the RMS: empty subspaces must not dilute the tolerance
            err3 = std::max(err3, e3 * e3);
            err5 = std::max(err5, e5 * e5);
        }
        double deno = err5 + 0.01 * err3;
        if (deno <= 0.0) deno = 1.0;
        const double err = std::abs(h) * err5 / std::sqrt(deno);

        if (!finite || !std::isfinite(err)) {
            ++rejected_;
            last_rejected_ = true;
            h *= 0.2;
            continue;
        }

        const double fac11 = std::pow(err, expo);
        const double fac = std::clamp(fac11 / safe, 1.0 / fac_max, 1.0 / fac_min);
        if (err <= 1.0) {
            ++accepted_;
            std::swap(y_old_, y_);
            std::swap(f_old_, f_);
            std::copy(y_new_.begin(), y_new_.end(), y_.begin());
            t_old_ = t_;
            t_ = t_new;
            h_last_ = h;
            eval(t_, y_, f_);
            for (double v : f_) {
                if (!std::isfinite(v)) return StepOutcome::non_finite;
            }
            double h_new = h / fac;
            if (last_rejected_) h_new = std::min(h_new, h);
            // a step clipped at t_limit says nothing about the natural step size
            h_next_ = reaches_limit ? std::max(h_new, h_next_) : h_new;
            h_next_ = std::min(h_next_, max_step_);
            last_rejected_ = false;
            dense_ready_ = false;
            return StepOutcome::accepted;
        }
        ++rejected_;
        last_rejected_ = true;
        h /= std::min(1.0 / fac_min, fac11 / safe);
    }
}

void Dop853::prepare_dense() {
    // The stage vectors of the last accepted step are still in k2_..k10_ and
    // f_old_ (first stage); f_ holds f(t, y) at the step end.
    const std::size_t n = n_;
    const double h = h_last_;
    const double* y = y_old_.data();
    const double* k1 = f_old_.data();
    const double* fn = f_.data();
    for (std::size_t i = 0; i < n; ++i) {
        rc1_[i] = y[i];
        const double ydiff = y_[i] - y[i];
        rc2_[i] = ydiff;
        const double bspl = h * k1[i] - ydiff;
        rc3_[i] = bspl;
        rc4_[i] = ydiff - h * fn[i] - bspl;
        rc5_[i] = d41 * k1[i] + d46 * k6_[i] + d47 * k7_[i] + d48 * k8_[i] + d49 * k9_[i] +
                  d410 * k10_[i] + d411 * k2_[i] + d412 * k3_[i];
        rc6_[i] = d51 * k1[i] + d56 * k6_[i] + d57 * k7_[i] + d58 * k8_[i] + d59 * k9_[i] +
                  d510 * k10_[i] + d511 * k2_[i] + d512 * k3_[i];
        rc7_[i] = d61 * k1[i] + d66 * k6_[i] + d67 * k7_[i] + d68 * k8_[i] + d69 * k9_[i] +
                  d610 * k10_[i] + d611 * k2_[i] + d612 * k3_[i];
        rc8_[i] = d71 * k1[i] + d76 * k6_[i] + d77 * k7_[i] + d78 * k8_[i] + d79 * k9_[i] +
                  d710 * k10_[i] + d711 * k2_[i] + d712 * k3_[i];
    }
    double* yt = ytmp_.data();
    for (std::size_t i = 0; i < n; ++i)
        yt[i] = y[i] + h * (a141 * k1[i] + a147 * k7_[i] + a148 * k8_[i] + a149 * k9_[i] +
                            a1410 * k10_[i] + a1411 * k2_[i] + a1412 * k3_[i] + a1413 * fn[i]);
    eval(t_old_ + c14 * h, ytmp_, k14_);
    for (std::size_t i = 0; i < n; ++i)
        yt[i] = y[i] + h * (a151 * k1[i] + a156 * k6_[i] + a157 * k7_[i] + a158 * k8_[i] +
                            a1511 * k2_[i] + a1512 * k3_[i] + a1513 * fn[i] + a1514 * k14_[i]);
    eval(t_old_ + c15 * h, ytmp_, k15_);
    for (std::size_t i = 0; i < n; ++i)
        yt[i] = y[i] + h * (a161 * k1[i] + a166 * k6_[i] + a167 * k7_[i] + a168 * k8_[i] +
                            a169 * k9_[i] + a1613 * fn[i] + a1614 * k14_[i] + a1615 * k15_[i]);
    eval(t_old_ + c16 * h, ytmp_, k16_);
    for (std::size_t i = 0; i < n; ++i) {
        rc5_[i] = h * (rc5_[i] + d413 * fn[i] + d414 * k14_[i] + d415 * k15_[i] + d416 * k16_[i]);
        rc6_[i] = h * (rc6_[i] + d513 * fn[i] + d514 * k14_[i] + d515 * k15_[i] + d516 * k16_[i]);
        rc7_[i] = h * (rc7_[i] + d613 * fn[i] + d614 * k14_[i] + d615 * k15_[i] + d616 * k16_[i]);
        rc8_[i] = h * (rc8_[i] + d713 * fn[i] + d714 * k14_[i] + d715 * k15_[i] + d716 * k16_[i]);
    }
    dense_ready_ = true;
}

void Dop853::interpolate(double t, std::span<double> out) {
    if (t == t_) {
        std::copy(y_.begin(), y_.end(), out.begin());
        return;
    }
    if (t == t_old_) {
        std::copy(y_old_.begin(), y_old_.end(), out.begin());
        return;
    }
    if (!dense_ready_) prepare_dense();
    const double s = (t - t_old_) / h_last_;
    const double s1 = 1.0 - s;
    for (std::size_t i = 0; i < n_; ++i) {
        const double conpar = rc5_[i] + s * (rc6_[i] + s1 * (rc7_[i] + s * rc8_[i]));
        out[i] = rc1_[i] + s * (rc2_[i] + s1 * (rc3_[i] + s * (rc4_[i] + s1 * conpar)));
    }
}

}  // namespace cavity
