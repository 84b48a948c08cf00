#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace pcetl {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
/// A list of points, one point per row.
using PointSet = Eigen::MatrixXd;

/// Slack allowed beyond a box face before a point is rejected.
inline constexpr double kBoxTolerance = 1e-12;

/// Axis-aligned box in model units.
class DomainBox {
public:
    DomainBox(std::vector<double> lower, std::vector<double> upper);

    static DomainBox cube(std::size_t dimension, double lower, double upper);
    /// Smallest box containing both arguments.
    static DomainBox hull(const DomainBox& a, const DomainBox& b);

    std::size_t dimension() const { return lower_.size(); }
    const std::vector<double>& lower() const { return lower_; }
    const std::vector<double>& upper() const { return upper_; }
    double width(std::size_t i) const { return upper_[i] - lower_[i]; }
    double center(std::size_t i) const { return 0.5 * (lower_[i] + upper_[i]); }

    bool contains(Eigen::Ref<const Vector> x, double tolerance = kBoxTolerance) const;
    DomainBox translated(std::size_t axis, double offset) const;

    bool operator==(const DomainBox&) const = default;

private:
    std::vector<double> lower_;
    std::vector<double> upper_;
};

/// Number of total-order multi-indices in n dimensions up to degree d,
/// (n+d)! / (n! d!). Throws DomainError when the count does not fit.
std::size_t n_pce(std::size_t n, std::size_t d);

/// Total-order multi-index set in graded lexicographic order: indices are
/// grouped by total degree, and inside one degree the first component
/// decreases fastest-first, e.g. (0,0) (1,0) (0,1) (2,0) (1,1) (0,2).
class MultiIndexSet {
public:
    static MultiIndexSet total_order(std::size_t dimension, std::size_t degree);

    std::size_t dimension() const { return dimension_; }
    std::size_t degree() const { return degree_; }
    std::size_t size() const { return dimension_ == 0 ? 0 : flat_.size() / dimension_; }
    std::span<const int> operator[](std::size_t k) const {
        return {flat_.data() + k * dimension_, dimension_};
    }

private:
    MultiIndexSet(std::size_t dimension, std::size_t degree, std::vector<int> flat)
        : dimension_(dimension), degree_(degree), flat_(std::move(flat)) {}

    std::size_t dimension_;
    std::size_t degree_;
    std::vector<int> flat_;
};

/// Orthonormal multivariate Legendre basis over a box.
class BasisSpec {
public:
    BasisSpec(DomainBox box, std::size_t degree);

    const DomainBox& box() const { return box_; }
    const MultiIndexSet& index_set() const { return indices_; }
    std::size_t dimension() const { return box_.dimension(); }
    std::size_t degree() const { return indices_.degree(); }
    std::size_t size() const { return indices_.size(); }

private:
    DomainBox box_;
    MultiIndexSet indices_;
};

/// Affine map of x onto [-1, 1]^n. Faces map exactly to +-1.
Vector to_reference(const DomainBox& box, Eigen::Ref<const Vector> x);
Vector from_reference(const DomainBox& box, Eigen::Ref<const Vector> xi);

/// sqrt(2k+1) P_k(xi): unit norm under the uniform probability density on
/// [-1, 1]. Writes psi_0 .. psi_{out.size()-1}.
void legendre_orthonormal(double xi, std::span<double> out);
double legendre_orthonormal(int k, double xi);

Vector eval_basis(const BasisSpec& basis, Eigen::Ref<const Vector> x);

/// Design matrix, row k = eval_basis(basis, X.row(k)). Rows are filled in
/// parallel with OpenMP.
Matrix vandermonde(const BasisSpec& basis, const PointSet& X);
/// Single-threaded reference for vandermonde().
Matrix vandermonde_serial(const BasisSpec& basis, const PointSet& X);

}  // namespace pcetl
