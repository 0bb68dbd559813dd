// State types and right-hand sides for a two-level atom with recoil moving in a
// quantized standing-wave cavity mode.
//
// Three dynamical systems share the same translational part (x, p):
//   - semiclassical: one Bloch-like triple (u, v, z) with excitation number N;
//   - Fock pair:     two triples for the subspaces with nbar and nbar+1 quanta;
//   - ladder:        triples n = 0..n_max of the truncated infinite hierarchy.
//
// Units: time in 1/Omega_0, position in 1/k_f, momentum in hbar*k_f.

#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace cavity {

/// Dimensionless control parameters.
struct ControlParams {
    double alpha = 1e-3;  ///< recoil frequency hbar k_f^2 / (m_a Omega_0)
    double delta = 0.0;   ///< detuning (omega_f - omega_a) / Omega_0
    int nbar = 10;        ///< initial photon number of the Fock state

    /// Throws std::invalid_argument unless alpha > 0, nbar >= 0 and delta is finite.
    void validate() const;
};

struct BlochVector {
    double u = 0.0;
    double v = 0.0;
    double z = 0.0;

    double norm() const;
};

struct SemiclassicalState {
    double x = 0.0;
    double p = 0.0;
    double u = 0.0;
    double v = 0.0;
    double z = 0.0;
    double N = 1.0;  ///< conserved excitation number, constant along the flow
};

/// Triples for the (nbar-1) and nbar subspaces; "lower" couples with sqrt(nbar),
/// "upper" with sqrt(nbar+1).
struct FockPairState {
    double x = 0.0;
    double p = 0.0;
    BlochVector lower;
    BlochVector upper;
};

struct LadderState {
    double x = 0.0;
    double p = 0.0;
    std::vector<BlochVector> components;  ///< index n couples with sqrt(n+1)

    int n_max() const { return static_cast<int>(components.size()) - 1; }
};

/// Atom at x0 with momentum p0 and inversion z_in, field in the Fock state |nbar>.
/// Amplitudes are taken relatively real, so every u and v starts at zero.
struct InitialPreparation {
    double x0 = 0.0;
    double p0 = 50.0;
    double z_in = 0.0;
};

// ---------------------------------------------------------------------------
// Semiclassical system

/// Derivative of the semiclassical phase point. The N field of the result is 0.
SemiclassicalState semiclassical_rhs(const SemiclassicalState& s, const ControlParams& params);

struct SemiclassicalIntegrals {
    double energy;       ///< W
    double bloch_norm;   ///< R
};

SemiclassicalIntegrals semiclassical_integrals(const SemiclassicalState& s,
                                               const ControlParams& params);

// ---------------------------------------------------------------------------
// Fock-pair system

FockPairState fock_pair_rhs(const FockPairState& s, const ControlParams& params);

struct FockPairIntegrals {
    double energy;
    double lower_norm;
    double upper_norm;
};

FockPairIntegrals fock_pair_integrals(const FockPairState& s, const ControlParams& params);

// ---------------------------------------------------------------------------
// Truncated ladder

LadderState ladder_rhs(const LadderState& s, const ControlParams& params);

struct LadderIntegrals {
    double energy;
    std::vector<double> norms;
    double total_probability;  ///< sum of norms; 1 up to truncation leakage
    double inversion;          ///< sum of z_n
};

LadderIntegrals ladder_integrals(const LadderState& s, const ControlParams& params);

// ---------------------------------------------------------------------------
// Preparation and reduction maps

/// (u, v, z) from the amplitudes a_n of |2,n> and b_{n+1} of |1,n+1>.
BlochVector amplitudes_to_bloch(std::complex<double> a_n, std::complex<double> b_next);

/// Fock-pair initial state; throws for z_in outside [-1, 1] and for nbar = 0
/// unless z_in = 1 (the lower subspace does not exist without photons).
FockPairState prepare_initial(const InitialPreparation& prep, const ControlParams& params);

/// Semiclassical equivalent of an energy-eigenstate preparation: N = nbar+1 for
/// z_in = +1, N = nbar for z_in = -1. Any other z_in is rejected.
SemiclassicalState reduce_to_semiclassical(const InitialPreparation& prep,
                                           const ControlParams& params);

/// Places the Fock pair at ladder indices nbar-1 and nbar of an (n_max+1)-triple ladder.
LadderState embed_in_ladder(const FockPairState& s, const ControlParams& params, int n_max);

// ---------------------------------------------------------------------------
// Flat-vector view used by the integrator and the tangent-space code.

enum class ModelKind { semiclassical, fock_pair, ladder };

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& name);

/// A model bound to its parameters. Vector layouts:
///   semiclassical  [x, p, u, v, z]
///   fock_pair      [x, p, u_lo, v_lo, z_lo, u_up, v_up, z_up]
///   ladder         [x, p, u_0, v_0, z_0, ..., u_nmax, v_nmax, z_nmax]
class Model {
public:
    static Model semiclassical(const ControlParams& params, double excitations);
    static Model fock_pair(const ControlParams& params);
    static Model ladder(const ControlParams& params, int n_max);

    ModelKind kind() const { return kind_; }
    const ControlParams& params() const { return params_; }
    std::size_t dimension() const { return 2 + 3 * couplings_.size(); }
    /// sqrt(N) per triple in vector order.
    const std::vector<double>& couplings() const { return couplings_; }
    /// Excitation number of the semiclassical model (0 for the others).
    double excitations() const { return excitations_; }

    std::vector<std::string> component_names() const;

    /// Unchecked fast path; y and dydt must have dimension() entries.
    void rhs(std::span<const double> y, std::span<double> dydt) const;
    /// Directional derivative J(y) w.
    void tangent(std::span<const double> y, std::span<const double> w,
                 std::span<double> jw) const;

    double energy(std::span<const double> y) const;
    std::vector<double> bloch_norms(std::span<const double> y) const;
    double inversion(std::span<const double> y) const;

    std::vector<double> pack(const SemiclassicalState& s) const;
    std::vector<double> pack(const FockPairState& s) const;
    std::vector<double> pack(const LadderState& s) const;

private:
    Model(ModelKind kind, const ControlParams& params, std::vector<double> couplings,
          double excitations);

    ModelKind kind_;
    ControlParams params_;
    std::vector<double> couplings_;
    double excitations_ = 0.0;
};

SemiclassicalState unpack_semiclassical(std::span<const double> y, double excitations);
FockPairState unpack_fock_pair(std::span<const double> y);
LadderState unpack_ladder(std::span<const double> y);

}  // namespace cavity
