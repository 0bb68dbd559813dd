#include "cavity/model.hpp"

#include <cmath>
#include <stdexcept>

namespace cavity {

namespace {

void require_finite(std::initializer_list<double> values, const char* what) {
    for (double v : values) {
        if (!std::isfinite(v)) {
            throw std::invalid_argument(std::string(what) + ": non-finite state component");
        }
    }
}

void require_finite(const BlochVector& b, const char* what) {
    require_finite({b.u, b.v, b.z}, what);
}

// Bloch rotation of one triple driven by the standing wave at position x.
BlochVector bloch_rate(const BlochVector& b, double coupling, double delta, double cos_x) {
    return {delta * b.v,
            -delta * b.u + 2.0 * coupling * b.z * cos_x,
            -2.0 * coupling * b.v * cos_x};
}

bool is_zero(const BlochVector& b) { return b.u == 0.0 && b.v == 0.0 && b.z == 0.0; }

}  // namespace

void ControlParams::validate() const {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
        throw std::invalid_argument("alpha must be a finite positive number");
    }
    if (!std::isfinite(delta)) {
        throw std::invalid_argument("delta must be finite");
    }
    if (nbar < 0) {
        throw std::invalid_argument("nbar must be non-negative");
    }
}

double BlochVector::norm() const { return std::sqrt(u * u + v * v + z * z); }

// ---------------------------------------------------------------------------

SemiclassicalState semiclassical_rhs(const SemiclassicalState& s, const ControlParams& params) {
    require_finite({s.x, s.p, s.u, s.v, s.z, s.N}, "semiclassical_rhs");
    if (!(s.N > 0.0)) {
        throw std::invalid_argument("semiclassical_rhs: excitation number N must be positive");
    }
    const double g = std::sqrt(s.N);
    const double c = std::cos(s.x);
    const BlochVector rate = bloch_rate({s.u, s.v, s.z}, g, params.delta, c);
    return {params.alpha * s.p, -g * s.u * std::sin(s.x), rate.u, rate.v, rate.z, 0.0};
}

SemiclassicalIntegrals semiclassical_integrals(const SemiclassicalState& s,
                                               const ControlParams& params) {
    require_finite({s.x, s.p, s.u, s.v, s.z, s.N}, "semiclassical_integrals");
    const double energy = 0.5 * params.alpha * s.p * s.p - s.u * std::sqrt(s.N) * std::cos(s.x) -
                          0.5 * params.delta * s.z;
    return {energy, BlochVector{s.u, s.v, s.z}.norm()};
}

// ---------------------------------------------------------------------------

FockPairState fock_pair_rhs(const FockPairState& s, const ControlParams& params) {
    require_finite({s.x, s.p}, "fock_pair_rhs");
    require_finite(s.lower, "fock_pair_rhs");
    require_finite(s.upper, "fock_pair_rhs");
    if (params.nbar == 0 && !is_zero(s.lower)) {
        throw std::invalid_argument(
            "fock_pair_rhs: nbar = 0 has no lower subspace, its triple must be zero");
    }
    const double g_lo = std::sqrt(static_cast<double>(params.nbar));
    const double g_up = std::sqrt(static_cast<double>(params.nbar) + 1.0);
    const double c = std::cos(s.x);
    FockPairState d;
    d.x = params.alpha * s.p;
    d.p = -(g_lo * s.lower.u + g_up * s.upper.u) * std::sin(s.x);
    d.lower = bloch_rate(s.lower, g_lo, params.delta, c);
    d.upper = bloch_rate(s.upper, g_up, params.delta, c);
    return d;
}

FockPairIntegrals fock_pair_integrals(const FockPairState& s, const ControlParams& params) {
    const double g_lo = std::sqrt(static_cast<double>(params.nbar));
    const double g_up = std::sqrt(static_cast<double>(params.nbar) + 1.0);
    const double energy = 0.5 * params.alpha * s.p * s.p -
                          (g_lo * s.lower.u + g_up * s.upper.u) * std::cos(s.x) -
                          0.5 * params.delta * (s.lower.z + s.upper.z);
    return {energy, s.lower.norm(), s.upper.norm()};
}

// ---------------------------------------------------------------------------

LadderState ladder_rhs(const LadderState& s, const ControlParams& params) {
    if (s.components.empty()) {
        throw std::invalid_argument("ladder_rhs: n_max must be >= 0");
    }
    require_finite({s.x, s.p}, "ladder_rhs");
    const double c = std::cos(s.x);
    LadderState d;
    d.x = params.alpha * s.p;
    d.components.resize(s.components.size());
    double force = 0.0;
    for (std::size_t n = 0; n < s.components.size(); ++n) {
        const BlochVector& b = s.components[n];
        require_finite(b, "ladder_rhs");
        const double g = std::sqrt(static_cast<double>(n) + 1.0);
        force += g * b.u;
        d.components[n] = bloch_rate(b, g, params.delta, c);
    }
    d.p = -force * std::sin(s.x);
    return d;
}

LadderIntegrals ladder_integrals(const LadderState& s, const ControlParams& params) {
    LadderIntegrals out{0.0, {}, 0.0, 0.0};
    double coupling_sum = 0.0;
    out.norms.reserve(s.components.size());
    for (std::size_t n = 0; n < s.components.size(); ++n) {
        const BlochVector& b = s.components[n];
        coupling_sum += std::sqrt(static_cast<double>(n) + 1.0) * b.u;
        out.inversion += b.z;
        out.norms.push_back(b.norm());
        out.total_probability += out.norms.back();
    }
    out.energy = 0.5 * params.alpha * s.p * s.p - coupling_sum * std::cos(s.x) -
                 0.5 * params.delta * out.inversion;
    return out;
}

// ---------------------------------------------------------------------------

BlochVector amplitudes_to_bloch(std::complex<double> a_n, std::complex<double> b_next) {
    const std::complex<double> c = a_n * std::conj(b_next);
    return {2.0 * c.real(), -2.0 * c.imag(), std::norm(a_n) - std::norm(b_next)};
}

FockPairState prepare_initial(const InitialPreparation& prep, const ControlParams& params) {
    params.validate();
    require_finite({prep.x0, prep.p0, prep.z_in}, "prepare_initial");
    if (prep.z_in < -1.0 || prep.z_in > 1.0) {
        throw std::invalid_argument("prepare_initial: z_in must lie in [-1, 1]");
    }
    if (params.nbar == 0 && prep.z_in != 1.0) {
        throw std::invalid_argument(
            "prepare_initial: with nbar = 0 only the excited preparation z_in = 1 couples to the field");
    }
    FockPairState s;
    s.x = prep.x0;
    s.p = prep.p0;
    // |a_n(0)|^2 = (1 + z_in)/2 and |b_n(0)|^2 = (1 - z_in)/2
    s.lower.z = -0.5 * (1.0 - prep.z_in);
    s.upper.z = 0.5 * (1.0 + prep.z_in);
    return s;
}

SemiclassicalState reduce_to_semiclassical(const InitialPreparation& prep,
                                           const ControlParams& params) {
    params.validate();
    require_finite({prep.x0, prep.p0, prep.z_in}, "reduce_to_semiclassical");
    if (prep.z_in != 1.0 && prep.z_in != -1.0) {
        throw std::invalid_argument(
            "reduce_to_semiclassical: only energy eigenstates (z_in = +1 or -1) reduce");
    }
    const double N = prep.z_in > 0.0 ? params.nbar + 1.0 : static_cast<double>(params.nbar);
    if (!(N > 0.0)) {
        throw std::invalid_argument("reduce_to_semiclassical: ground state with nbar = 0 has N = 0");
    }
    return {prep.x0, prep.p0, 0.0, 0.0, prep.z_in, N};
}

LadderState embed_in_ladder(const FockPairState& s, const ControlParams& params, int n_max) {
    if (n_max < params.nbar) {
        throw std::invalid_argument("embed_in_ladder: n_max must be at least nbar");
    }
    LadderState out;
    out.x = s.x;
    out.p = s.p;
    out.components.assign(static_cast<std::size_t>(n_max) + 1, BlochVector{});
    if (params.nbar > 0) {
        out.components[static_cast<std::size_t>(params.nbar) - 1] = s.lower;
    } else if (!is_zero(s.lower)) {
        throw std::invalid_argument("embed_in_ladder: nbar = 0 with a nonzero lower triple");
    }
    out.components[static_cast<std::size_t>(params.nbar)] = s.upper;
    return out;
}

// ---------------------------------------------------------------------------

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::semiclassical: return "semiclassical";
        case ModelKind::fock_pair: return "fock-pair";
        case ModelKind::ladder: return "ladder";
    }
    return "unknown";
}

ModelKind parse_model_kind(const std::string& name) {
    if (name == "semiclassical") return ModelKind::semiclassical;
    if (name == "fock-pair" || name == "fock_pair") return ModelKind::fock_pair;
    if (name == "ladder") return ModelKind::ladder;
    throw std::invalid_argument("unknown model '" + name + "'");
}

Model::Model(ModelKind kind, const ControlParams& params, std::vector<double> couplings,
             double excitations)
    : kind_(kind), params_(params), couplings_(std::move(couplings)), excitations_(excitations) {}

Model Model::semiclassical(const ControlParams& params, double excitations) {
    params.validate();
    if (!(excitations > 0.0) || !std::isfinite(excitations)) {
        throw std::invalid_argument("semiclassical model needs a positive excitation number");
    }
    return Model(ModelKind::semiclassical, params, {std::sqrt(excitations)}, excitations);
}

Model Model::fock_pair(const ControlParams& params) {
    params.validate();
    const double n = static_cast<double>(params.nbar);
    return Model(ModelKind::fock_pair, params, {std::sqrt(n), std::sqrt(n + 1.0)}, 0.0);
}

Model Model::ladder(const ControlParams& params, int n_max) {
    params.validate();
    if (n_max < 0) {
        throw std::invalid_argument("ladder model needs n_max >= 0");
    }
    std::vector<double> g(static_cast<std::size_t>(n_max) + 1);
    for (std::size_t n = 0; n < g.size(); ++n) g[n] = std::sqrt(static_cast<double>(n) + 1.0);
    return Model(ModelKind::ladder, params, std::move(g), 0.0);
}

std::vector<std::string> Model::component_names() const {
    std::vector<std::string> names{"x", "p"};
    auto add = [&](const std::string& suffix) {
        names.push_back("u" + suffix);
        names.push_back("v" + suffix);
        names.push_back("z" + suffix);
    };
    switch (kind_) {
        case ModelKind::semiclassical: add(""); break;
        case ModelKind::fock_pair:
            add("_lower");
            add("_upper");
            break;
        case ModelKind::ladder:
            for (std::size_t n = 0; n < couplings_.size(); ++n) add("_" + std::to_string(n));
            break;
    }
    return names;
}

void Model::rhs(std::span<const double> y, std::span<double> dydt) const {
    const double s = std::sin(y[0]);
    const double c = std::cos(y[0]);
    const double delta = params_.delta;
    double force = 0.0;
    for (std::size_t k = 0; k < couplings_.size(); ++k) {
        const double g = couplings_[k];
        const double u = y[2 + 3 * k];
        const double v = y[3 + 3 * k];
        const double z = y[4 + 3 * k];
        force += g * u;
        dydt[2 + 3 * k] = delta * v;
        dydt[3 + 3 * k] = -delta * u + 2.0 * g * z * c;
        dydt[4 + 3 * k] = -2.0 * g * v * c;
    }
    dydt[0] = params_.alpha * y[1];
    dydt[1] = -force * s;
}

void Model::tangent(std::span<const double> y, std::span<const double> w,
                    std::span<double> jw) const {
    const double s = std::sin(y[0]);
    const double c = std::cos(y[0]);
    const double wx = w[0];
    const double delta = params_.delta;
    double force = 0.0;
    double dforce = 0.0;
    for (std::size_t k = 0; k < couplings_.size(); ++k) {
        const double g = couplings_[k];
        const double u = y[2 + 3 * k];
        const double v = y[3 + 3 * k];
        const double z = y[4 + 3 * k];
        const double wu = w[2 + 3 * k];
        const double wv = w[3 + 3 * k];
        const double wz = w[4 + 3 * k];
        force += g * u;
        dforce += g * wu;
        jw[2 + 3 * k] = delta * wv;
        jw[3 + 3 * k] = -delta * wu + 2.0 * g * (wz * c - z * s * wx);
        jw[4 + 3 * k] = -2.0 * g * (wv * c - v * s * wx);
    }
    jw[0] = params_.alpha * w[1];
    jw[1] = -dforce * s - force * c * wx;
}

double Model::energy(std::span<const double> y) const {
    double coupling_sum = 0.0;
    double inversion = 0.0;
    for (std::size_t k = 0; k < couplings_.size(); ++k) {
        coupling_sum += couplings_[k] * y[2 + 3 * k];
        inversion += y[4 + 3 * k];
    }
    return 0.5 * params_.alpha * y[1] * y[1] - coupling_sum * std::cos(y[0]) -
           0.5 * params_.delta * inversion;
}

std::vector<double> Model::bloch_norms(std::span<const double> y) const {
    std::vector<double> out(couplings_.size());
    for (std::size_t k = 0; k < out.size(); ++k) {
        out[k] = BlochVector{y[2 + 3 * k], y[3 + 3 * k], y[4 + 3 * k]}.norm();
    }
    return out;
}

double Model::inversion(std::span<const double> y) const {
    double z = 0.0;
    for (std::size_t k = 0; k < couplings_.size(); ++k) z += y[4 + 3 * k];
    return z;
}

std::vector<double> Model::pack(const SemiclassicalState& s) const {
    if (kind_ != ModelKind::semiclassical) {
        throw std::invalid_argument("pack: semiclassical state given to " + to_string(kind_));
    }
    return {s.x, s.p, s.u, s.v, s.z};
}

std::vector<double> Model::pack(const FockPairState& s) const {
    if (kind_ != ModelKind::fock_pair) {
        throw std::invalid_argument("pack: Fock-pair state given to " + to_string(kind_));
    }
    return {s.x, s.p, s.lower.u, s.lower.v, s.lower.z, s.upper.u, s.upper.v, s.upper.z};
}

std::vector<double> Model::pack(const LadderState& s) const {
    if (kind_ != ModelKind::ladder || s.components.size() != couplings_.size()) {
        throw std::invalid_argument("pack: ladder state does not match the model truncation");
    }
    std::vector<double> y{s.x, s.p};
    for (const BlochVector& b : s.components) {
        y.push_back(b.u);
        y.push_back(b.v);
        y.push_back(b.z);
    }
    return y;
}

SemiclassicalState unpack_semiclassical(std::span<const double> y, double excitations) {
    return {y[0], y[1], y[2], y[3], y[4], excitations};
}

FockPairState unpack_fock_pair(std::span<const double> y) {
    return {y[0], y[1], {y[2], y[3], y[4]}, {y[5], y[6], y[7]}};
}

LadderState unpack_ladder(std::span<const double> y) {
    LadderState s;
    s.x = y[0];
    s.p = y[1];
    for (std::size_t i = 2; i + 2 < y.size(); i += 3) s.components.push_back({y[i], y[i + 1], y[i + 2]});
    return s;
}

}  // namespace cavity
