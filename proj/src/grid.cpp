#include "plateflow/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace plateflow {

Grid Grid::build(int dim, std::vector<double> lengths, std::vector<Index> interior_counts)
{
    if (dim != 1 && dim != 2)
        throw std::invalid_argument("grid dimension must be 1 or 2, got " + std::to_string(dim));
    if (lengths.size() != static_cast<std::size_t>(dim) ||
        interior_counts.size() != static_cast<std::size_t>(dim))
        throw std::invalid_argument("grid needs one length and one interior count per axis");

    Grid g;
    g.dim_ = dim;
    g.quad_weight_ = 1.0;
    g.interior_size_ = 1;
    g.extended_size_ = 1;
    for (int k = 0; k < dim; ++k) {
        if (!(lengths[k] > 0.0) || !std::isfinite(lengths[k]))
            throw std::invalid_argument("grid lengths must be positive and finite");
        if (interior_counts[k] < 1)
            throw std::invalid_argument("grid interior counts must be >= 1");
        g.lengths_[k] = lengths[k];
        g.counts_[k] = interior_counts[k];
        g.spacing_[k] = lengths[k] / static_cast<double>(interior_counts[k] + 1);
        g.quad_weight_ *= g.spacing_[k];
        g.interior_size_ *= interior_counts[k];
        g.extended_size_ *= interior_counts[k] + 2;
    }
    g.assemble();
    return g;
}

MultiIndex Grid::interior_multi_index(Index flat) const
{
    if (dim_ == 1)
        return {flat + 1, 0};
    return {flat / counts_[1] + 1, flat % counts_[1] + 1};
}

MultiIndex Grid::extended_multi_index(Index flat) const
{
    if (dim_ == 1)
        return {flat, 0};
    const Index n1 = counts_[1] + 2;
    return {flat / n1, flat % n1};
}

Index Grid::interior_flat(const MultiIndex& j) const
{
    if (dim_ == 1)
        return j[0] - 1;
    return (j[0] - 1) * counts_[1] + (j[1] - 1);
}

Index Grid::extended_flat(const MultiIndex& j) const
{
    if (dim_ == 1)
        return j[0];
    return j[0] * (counts_[1] + 2) + j[1];
}

Point Grid::coords(const MultiIndex& j) const
{
    Point x{0.0, 0.0};
    for (int k = 0; k < dim_; ++k)
        x[k] = static_cast<double>(j[k]) * spacing_[k];
    return x;
}

bool Grid::is_boundary(const MultiIndex& j) const
{
    for (int k = 0; k < dim_; ++k)
        if (j[k] == 0 || j[k] == counts_[k] + 1)
            return true;
    return false;
}

Index Grid::interior_to_extended(Index flat) const
{
    return extended_flat(interior_multi_index(flat));
}

bool Grid::same_shape(const Grid& other) const
{
    if (dim_ != other.dim_)
        return false;
    for (int k = 0; k < dim_; ++k)
        if (counts_[k] != other.counts_[k] || lengths_[k] != other.lengths_[k])
            return false;
    return true;
}

void Grid::assemble()
{
    // Row r of L is the Laplacian at extended node r. A neighbour index of -1
    // or m+2 is reflected back to 1 or m (zero normal derivative); a
    // neighbour on the boundary contributes nothing (u = 0 there).
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(static_cast<std::size_t>(extended_size_) * (2 * dim_ + 1));

    auto add = [&](Index row, MultiIndex j, double w) {
        if (is_boundary(j))
            return;
        triplets.emplace_back(row, interior_flat(j), w);
    };

    for (Index r = 0; r < extended_size_; ++r) {
        const MultiIndex j = extended_multi_index(r);
        for (int k = 0; k < dim_; ++k) {
            const double ih2 = 1.0 / (spacing_[k] * spacing_[k]);
            const Index last = counts_[k] + 1;
            MultiIndex lo = j, hi = j;
            lo[k] = j[k] == 0 ? 1 : j[k] - 1;
            hi[k] = j[k] == last ? last - 1 : j[k] + 1;
            add(r, lo, ih2);
            add(r, hi, ih2);
            add(r, j, -2.0 * ih2);
        }
    }

    auto ops = std::make_shared<Operators>();
    ops->laplacian.resize(extended_size_, interior_size_);
    ops->laplacian.setFromTriplets(triplets.begin(), triplets.end());
    ops->laplacian.makeCompressed();
    ops->bilaplacian = SparseMatrix(ops->laplacian.transpose() * ops->laplacian);
    ops->bilaplacian.makeCompressed();

    double norm = 0.0;
    Eigen::VectorXd rows = Eigen::VectorXd::Zero(interior_size_);
    for (Index c = 0; c < ops->bilaplacian.outerSize(); ++c)
        for (SparseMatrix::InnerIterator it(ops->bilaplacian, c); it; ++it)
            rows[it.row()] += std::abs(it.value());
    if (rows.size() > 0)
        norm = rows.maxCoeff();
    ops->bilaplacian_norm = norm;
    ops_ = std::move(ops);
}

void require_field(const Grid& g, const Field& u, const char* what)
{
    if (u.size() != g.interior_size())
        throw std::invalid_argument(std::string(what) + ": field has " + std::to_string(u.size()) +
                                    " values, grid has " + std::to_string(g.interior_size()) +
                                    " interior nodes");
}

ExtendedField extended_laplacian(const Grid& g, const Field& u)
{
    require_field(g, u, "extended_laplacian");
    return g.laplacian() * u;
}

EnergyGradient energy_and_gradient(const Grid& g, const Field& u)
{
    require_field(g, u, "energy_and_gradient");
    const ExtendedField lu = g.laplacian() * u;
    EnergyGradient out;
    out.energy = 0.5 * g.quad_weight() * lu.squaredNorm();
    out.bilaplacian = g.laplacian().transpose() * lu;
    out.gradient = g.quad_weight() * out.bilaplacian;
    return out;
}

double energy(const Grid& g, const Field& u)
{
    require_field(g, u, "energy");
    return 0.5 * g.quad_weight() * (g.laplacian() * u).squaredNorm();
}

double l2_norm(const Grid& g, const Field& u)
{
    return std::sqrt(g.quad_weight() * u.squaredNorm());
}

double inner(const Grid& g, const Field& u, const Field& v)
{
    return g.quad_weight() * u.dot(v);
}

Norms weighted_norms(const Grid& g, const Field& u)
{
    require_field(g, u, "weighted_norms");
    Norms out;
    if (u.size() == 0)
        return out;
    out.l2 = l2_norm(g, u);
    out.sup = u.cwiseAbs().maxCoeff();

    auto value = [&](MultiIndex j) {
        return g.is_boundary(j) ? 0.0 : u[g.interior_flat(j)];
    };
    for (Index i = 0; i < g.interior_size(); ++i) {
        const MultiIndex j = g.interior_multi_index(i);
        for (int k = 0; k < g.dim(); ++k) {
            MultiIndex lo = j, hi = j;
            --lo[k];
            ++hi[k];
            const double h = g.spacing(k);
            const double d2 = (value(lo) - 2.0 * u[i] + value(hi)) / (h * h);
            out.d2sup = std::max(out.d2sup, std::abs(d2));
        }
    }
    return out;
}

}  // namespace plateflow
