#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace plateflow {

using Index = Eigen::Index;
using SparseMatrix = Eigen::SparseMatrix<double>;

/// Real values on the interior nodes of a grid, lexicographic order with the
/// first axis varying slowest.
using Field = Eigen::VectorXd;

/// Real values on every node (boundary included), same ordering convention.
using ExtendedField = Eigen::VectorXd;

/// Per-axis node index. Unused trailing axes are zero.
using MultiIndex = std::array<Index, 2>;
using Point = std::array<double, 2>;

/**
 * Uniform clamped-plate grid on an interval or rectangle.
 *
 * Axis k has m_k interior nodes and spacing h_k = L_k / (m_k + 1). Nodes
 * carry indices j_k in {0, ..., m_k + 1}; boundary nodes (some j_k at either
 * end) hold u = 0 and are not stored in a Field. The zero normal derivative
 * is imposed by ghost reflection, u(-1) = u(1), when the Laplacian is
 * evaluated on the boundary.
 *
 * The Laplacian map L (extended nodes x interior nodes) and the bilaplacian
 * B = L^T L are assembled once at construction and shared between copies.
 */
class Grid {
public:
    /// Throws std::invalid_argument on dim outside {1,2}, non-positive
    /// lengths or counts, or mismatched vector sizes.
    static Grid build(int dim, std::vector<double> lengths, std::vector<Index> interior_counts);

    int dim() const { return dim_; }
    double length(int axis) const { return lengths_[axis]; }
    Index interior_count(int axis) const { return counts_[axis]; }
    double spacing(int axis) const { return spacing_[axis]; }
    double quad_weight() const { return quad_weight_; }

    Index interior_size() const { return interior_size_; }
    Index extended_size() const { return extended_size_; }

    /// Node count per axis including both boundary nodes.
    Index extended_count(int axis) const { return counts_[axis] + 2; }

    MultiIndex interior_multi_index(Index flat) const;
    MultiIndex extended_multi_index(Index flat) const;
    Index interior_flat(const MultiIndex& j) const;
    Index extended_flat(const MultiIndex& j) const;

    /// Coordinates of an extended-grid node.
    Point coords(const MultiIndex& j) const;
    Point interior_coords(Index flat) const { return coords(interior_multi_index(flat)); }
    Point extended_coords(Index flat) const { return coords(extended_multi_index(flat)); }
    bool is_boundary(const MultiIndex& j) const;

    /// Extended-grid position of interior node `flat`.
    Index interior_to_extended(Index flat) const;

    const SparseMatrix& laplacian() const { return ops_->laplacian; }
    const SparseMatrix& bilaplacian() const { return ops_->bilaplacian; }

    /// max_i sum_j |B_ij|, an upper bound for the spectral radius of B.
    double bilaplacian_norm() const { return ops_->bilaplacian_norm; }

    bool same_shape(const Grid& other) const;

private:
    struct Operators {
        SparseMatrix laplacian;
        SparseMatrix bilaplacian;
        double bilaplacian_norm = 0.0;
    };

    Grid() = default;
    void assemble();

    int dim_ = 1;
    std::array<double, 2> lengths_{1.0, 1.0};
    std::array<Index, 2> counts_{1, 1};
    std::array<double, 2> spacing_{1.0, 1.0};
    double quad_weight_ = 1.0;
    Index interior_size_ = 0;
    Index extended_size_ = 0;
    std::shared_ptr<const Operators> ops_;
};

/// Throws std::invalid_argument when `u` does not have one value per interior node.
void require_field(const Grid& g, const Field& u, const char* what);

/// Second-order central Laplacian at every node, boundary included.
ExtendedField extended_laplacian(const Grid& g, const Field& u);

struct EnergyGradient {
    double energy = 0.0;
    Field gradient;

    /// gradient / quad_weight, the discrete bilaplacian density B u.
    Field bilaplacian;
};

/// E_h(u) = (quad_weight / 2) * sum over all nodes of (L u)^2, and its exact
/// derivative quad_weight * B u.
EnergyGradient energy_and_gradient(const Grid& g, const Field& u);

/// Energy only, without forming the gradient.
double energy(const Grid& g, const Field& u);

struct Norms {
    double l2 = 0.0;
    double sup = 0.0;
    /// max over interior nodes and axes of the pure second central difference
    double d2sup = 0.0;
};

Norms weighted_norms(const Grid& g, const Field& u);

/// sqrt(quad_weight * sum u^2).
double l2_norm(const Grid& g, const Field& u);

/// Quadrature inner product on interior nodes.
double inner(const Grid& g, const Field& u, const Field& v);

/// Samples a pointwise function at every interior node.
template <typename F>
Field sample_interior(const Grid& g, F&& fn)
{
    Field out(g.interior_size());
    for (Index i = 0; i < g.interior_size(); ++i)
        out[i] = fn(g.interior_coords(i));
    return out;
}

}  // namespace plateflow
