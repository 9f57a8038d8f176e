#pragma once

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "lapgrowth/boundary_geometry.hpp"

namespace lapgrowth {

enum class KernelFamily { wrapped_gaussian, von_mises, compact_bump, zero };

/// raw: the profile integrates to 1 in arclength on each component.
/// unit_mean_under_uniform: mean 1 under the uniform measure of the component.
/// unit_normal_speed: the normal-projected mean on the reference component is 1,
///   so the identity map moves with unit normal speed.
enum class KernelNormalization { raw, unit_mean_under_uniform, unit_normal_speed };

struct KernelSpec {
    KernelFamily family = KernelFamily::wrapped_gaussian;
    double bandwidth = 0.3;
    double coupling = 0.0;
    KernelNormalization normalization = KernelNormalization::unit_normal_speed;
};

KernelFamily parse_kernel_family(const std::string& name);
KernelNormalization parse_kernel_normalization(const std::string& name);
std::string to_string(KernelFamily family);
std::string to_string(KernelNormalization normalization);
void validate(const KernelSpec& spec);

/// Raw same-component profile at periodic arclength offset `s` on a curve of
/// length `period`; integrates to 1 over one period.
double kernel_profile(const KernelSpec& spec, double period, double s);
/// Raw profile of a Euclidean distance (no wrapping), used across components.
double kernel_profile_free(const KernelSpec& spec, double distance);

/// Kernel bound to a reference boundary. Per-component scale factors are
/// computed once by periodic quadrature on the reference curve.
class Kernel {
  public:
    Kernel(KernelSpec spec, std::shared_ptr<const BoundaryMesh> mesh);

    const KernelSpec& spec() const noexcept { return spec_; }
    const BoundaryMesh& mesh() const noexcept { return *mesh_; }
    bool is_zero() const noexcept { return spec_.family == KernelFamily::zero; }

    double operator()(const BoundaryPoint& x, const BoundaryPoint& y) const;
    /// K(x_i, x_j) over mesh nodes.
    const Eigen::MatrixXd& node_matrix() const { return *matrix_; }
    /// K(x_i, y) for every node i.
    Eigen::VectorXd column(const BoundaryPoint& y) const;
    /// Sum_i w_i K(x, y_i) over mesh nodes y_i.
    double mean_under(const std::vector<double>& weights, const BoundaryPoint& x) const;
    double scale(std::size_t component) const { return scale_.at(component); }
    double peak(std::size_t component) const;

  private:
    KernelSpec spec_;
    std::shared_ptr<const BoundaryMesh> mesh_;
    std::vector<double> scale_;
    std::shared_ptr<const Eigen::MatrixXd> matrix_;
};

}  // namespace lapgrowth
