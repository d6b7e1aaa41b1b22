#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "v2v/losses.hpp"
#include "v2v/network.hpp"
#include "v2v/numerics.hpp"

namespace v2v {

/// Outcome of one checked claim. For bound claims, holds means
/// lhs <= rhs + 1e-9 and margin = rhs - lhs. For violation claims, holds
/// means the violation occurred (lhs > rhs strictly) and margin = lhs - rhs.
struct TheoryReport {
    std::string claim;
    std::string inputs_digest;
    double lhs = 0.0;
    double rhs = 0.0;
    bool holds = false;
    double margin = 0.0;
};

/// Slack allowed on bound-type claims to absorb floating point roundoff.
inline constexpr double kBoundTolerance = 1e-9;

std::string report_line(const TheoryReport& r);
TheoryReport parse_report_line(const std::string& line);

enum class LipschitzMethod { SpectralUpper, EmpiricalSup };

struct LipschitzEstimate {
    Vector per_output;       // one constant per output coordinate
    double total = 0.0;      // sum over outputs
    LipschitzMethod method = LipschitzMethod::SpectralUpper;
    std::size_t probe_count = 0; // 0 for the spectral bound
};

/// n independent signs, each +1 or -1 with probability 1/2.
std::vector<int> sample_signs(std::size_t n, SeededRng& rng);

/// Checks | ||x1-x|| - ||x2-x|| | <= ||x1-x2|| in the L1 norm.
TheoryReport check_mae_lipschitz(const Vector& x1, const Vector& x2, const Vector& x);

/// Builds x = 2*x2 and checks that squared-error distances violate the
/// triangle-style inequality at that point: lhs strictly exceeds rhs.
/// Requires ||x2||^2 > ||x1||^2.
TheoryReport construct_mse_violation(const Vector& x1, const Vector& x2);

/// Product-of-spectral-norms upper bound on each output coordinate's
/// Lipschitz constant: ||row_i(W_last)||_2 times the product of the hidden
/// layers' spectral norms. Valid for ReLU/Linear nets.
LipschitzEstimate lipschitz_upper(const Mlp& net);

/// Largest observed Jacobian row norms over the given probe inputs. A lower
/// estimate of the true constants; never a certified bound.
LipschitzEstimate lipschitz_empirical(const Mlp& net, const std::vector<Vector>& probes);

/// Checks |h(x+eta) - h(x)| <= L.total * ||eta||_2 where h(x) is the MAE of
/// the net's output at x against a fixed target (zero target when `target`
/// is empty). Only certified (SpectralUpper) estimates are accepted.
TheoryReport check_noise_bound(const Mlp& net, const Vector& x, const Vector& eta,
                               const Vector& target, const LipschitzEstimate& L);

/// Function family for Rademacher complexity: either a ball of linear maps
/// with bounded total row norm, or an explicit finite set of networks.
class FunctionFamily {
public:
    static FunctionFamily linear_ball(double radius, std::size_t in_dim,
                                      std::size_t out_dim);
    static FunctionFamily finite_set(std::vector<Mlp> members);

    bool is_linear_ball() const { return members_.empty(); }
    double radius() const { return radius_; }
    std::size_t in_dim() const { return in_dim_; }
    std::size_t out_dim() const { return out_dim_; }
    const std::vector<Mlp>& members() const { return members_; }

private:
    FunctionFamily() = default;
    double radius_ = 0.0;
    std::size_t in_dim_ = 0;
    std::size_t out_dim_ = 0;
    std::vector<Mlp> members_;
};

struct RademacherEstimate {
    double value = 0.0;
    double std_error = 0.0; // 0 for exact evaluations
    std::size_t draws = 0;  // 0 for exact evaluations
    bool exact = false;
};

/// Monte Carlo estimate of the empirical Rademacher complexity
///   E_sigma sup_f (1/N) sum_i sigma_i * <1, f(x_i)>,
/// with one shared sign per sample across output coordinates.
RademacherEstimate rademacher_mc(const std::vector<Vector>& samples,
                                 const FunctionFamily& family, std::size_t draws,
                                 SeededRng& rng);

/// Exact complexity by enumerating all 2^N sign patterns. N is capped at 20.
RademacherEstimate rademacher_exact(const std::vector<Vector>& samples,
                                    const FunctionFamily& family);

/// Diagnostic comparison of the train/held-out loss gap against the
/// Monte Carlo complexity of the singleton family {net} on the training
/// inputs. Informational: the report records the comparison, and `holds`
/// is not a certified bound check.
TheoryReport generalization_probe(const Mlp& net, const std::vector<Vector>& train_inputs,
                                  const std::vector<Vector>& train_targets,
                                  const std::vector<Vector>& held_inputs,
                                  const std::vector<Vector>& held_targets, LossKind kind,
                                  const AlphaVector* alpha, std::size_t draws,
                                  std::uint64_t seed);

} // namespace v2v
