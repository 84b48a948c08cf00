#include "pcetl/basis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "pcetl/errors.hpp"

namespace pcetl {

DomainBox::DomainBox(std::vector<double> lower, std::vector<double> upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
    if (lower_.empty()) throw DomainError("DomainBox: dimension must be at least 1");
    if (lower_.size() != upper_.size())
        throw DomainError("DomainBox: lower and upper bounds differ in length");
    for (std::size_t i = 0; i < lower_.size(); ++i) {
        if (!std::isfinite(lower_[i]) || !std::isfinite(upper_[i]) || !(lower_[i] < upper_[i])) {
            std::ostringstream msg;
            msg << "DomainBox: axis " << i << " needs lower < upper, got [" << lower_[i] << ", "
                << upper_[i] << "]";
            throw DomainError(msg.str());
        }
    }
}

DomainBox DomainBox::cube(std::size_t dimension, double lower, double upper) {
    return {std::vector<double>(dimension, lower), std::vector<double>(dimension, upper)};
}

DomainBox DomainBox::hull(const DomainBox& a, const DomainBox& b) {
    if (a.dimension() != b.dimension()) throw DomainError("DomainBox::hull: dimension mismatch");
    std::vector<double> lo(a.dimension()), hi(a.dimension());
    for (std::size_t i = 0; i < lo.size(); ++i) {
        lo[i] = std::min(a.lower_[i], b.lower_[i]);
        hi[i] = std::max(a.upper_[i], b.upper_[i]);
    }
    return {std::move(lo), std::move(hi)};
}

bool DomainBox::contains(Eigen::Ref<const Vector> x, double tolerance) const {
    if (static_cast<std::size_t>(x.size()) != dimension()) return false;
    for (std::size_t i = 0; i < dimension(); ++i) {
        const double slack_lo = tolerance * std::max(1.0, std::abs(lower_[i]));
        const double slack_hi = tolerance * std::max(1.0, std::abs(upper_[i]));
        if (!(x[i] >= lower_[i] - slack_lo && x[i] <= upper_[i] + slack_hi)) return false;
    }
    return true;
}

DomainBox DomainBox::translated(std::size_t axis, double offset) const {
    if (axis >= dimension()) throw DomainError("DomainBox::translated: axis out of range");
    DomainBox out = *this;
    out.lower_[axis] += offset;
    out.upper_[axis] += offset;
    return out;
}

std::size_t n_pce(std::size_t n, std::size_t d) {
    if (n < 1) throw DomainError("n_pce: dimension must be at least 1");
    // C(n+d, k) built incrementally; every partial product is itself a
    // binomial coefficient so the division is exact.
    const std::size_t k = std::min(n, d);
    const std::size_t top = n + d;
    if (top < n) throw DomainError("n_pce: n + d overflows");
    std::size_t result = 1;
    for (std::size_t i = 1; i <= k; ++i) {
        const std::size_t factor = top - k + i;
        if (result > std::numeric_limits<std::size_t>::max() / factor) {
            std::ostringstream msg;
            msg << "n_pce: (" << n << "+" << d << ")!/(" << n << "!" << d << "!) overflows";
            throw DomainError(msg.str());
        }
        result = result * factor / i;
    }
    return result;
}

namespace {

void append_degree(std::size_t pos, int remaining, std::vector<int>& current, std::vector<int>& out) {
    if (pos + 1 == current.size()) {
        current[pos] = remaining;
        out.insert(out.end(), current.begin(), current.end());
        return;
    }
    for (int first = remaining; first >= 0; --first) {
        current[pos] = first;
        append_degree(pos + 1, remaining - first, current, out);
    }
}

}  // namespace

MultiIndexSet MultiIndexSet::total_order(std::size_t dimension, std::size_t degree) {
    const std::size_t count = n_pce(dimension, degree);
    std::vector<int> flat;
    flat.reserve(count * dimension);
    std::vector<int> current(dimension, 0);
    for (std::size_t t = 0; t <= degree; ++t) append_degree(0, static_cast<int>(t), current, flat);
    return {dimension, degree, std::move(flat)};
}

BasisSpec::BasisSpec(DomainBox box, std::size_t degree)
    : box_(std::move(box)), indices_(MultiIndexSet::total_order(box_.dimension(), degree)) {}

Vector to_reference(const DomainBox& box, Eigen::Ref<const Vector> x) {
    if (!box.contains(x)) {
        std::ostringstream msg;
        msg << "to_reference: point (";
        for (Eigen::Index i = 0; i < x.size(); ++i) msg << (i ? ", " : "") << x[i];
        msg << ") lies outside the domain box";
        throw DomainError(msg.str());
    }
    Vector xi(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const auto k = static_cast<std::size_t>(i);
        const double t = 2.0 * (x[i] - box.lower()[k]) / box.width(k) - 1.0;
        xi[i] = std::clamp(t, -1.0, 1.0);
    }
    return xi;
}

Vector from_reference(const DomainBox& box, Eigen::Ref<const Vector> xi) {
    if (static_cast<std::size_t>(xi.size()) != box.dimension())
        throw DomainError("from_reference: dimension mismatch");
    Vector x(xi.size());
    for (Eigen::Index i = 0; i < xi.size(); ++i) {
        const auto k = static_cast<std::size_t>(i);
        x[i] = box.lower()[k] + 0.5 * (xi[i] + 1.0) * box.width(k);
    }
    return x;
}

void legendre_orthonormal(double xi, std::span<double> out) {
    if (out.empty()) return;
    // Three-term recurrence on the classical P_k, scaled at the end.
    double prev = 1.0;
    out[0] = 1.0;
    if (out.size() == 1) return;
    double cur = xi;
    out[1] = std::sqrt(3.0) * cur;
    for (std::size_t k = 1; k + 1 < out.size(); ++k) {
        const double kk = static_cast<double>(k);
        const double next = ((2.0 * kk + 1.0) * xi * cur - kk * prev) / (kk + 1.0);
        prev = cur;
        cur = next;
        out[k + 1] = std::sqrt(2.0 * kk + 3.0) * cur;
    }
}

double legendre_orthonormal(int k, double xi) {
    if (k < 0) throw DomainError("legendre_orthonormal: negative degree");
    std::vector<double> values(static_cast<std::size_t>(k) + 1);
    legendre_orthonormal(xi, values);
    return values.back();
}

namespace {

// Fills `row` (length basis.size()) from a reference-space point. `table`
// is scratch of size dimension * (degree + 1).
template <typename Row>
void fill_row(const BasisSpec& basis, const Vector& xi, std::vector<double>& table, Row&& row) {
    const std::size_t n = basis.dimension();
    const std::size_t stride = basis.degree() + 1;
    for (std::size_t j = 0; j < n; ++j)
        legendre_orthonormal(xi[static_cast<Eigen::Index>(j)],
                             std::span<double>(table.data() + j * stride, stride));
    const MultiIndexSet& indices = basis.index_set();
    for (std::size_t k = 0; k < indices.size(); ++k) {
        const auto alpha = indices[k];
        double v = 1.0;
        for (std::size_t j = 0; j < n; ++j) v *= table[j * stride + static_cast<std::size_t>(alpha[j])];
        row(static_cast<Eigen::Index>(k)) = v;
    }
}

void check_points(const BasisSpec& basis, const PointSet& X) {
    if (static_cast<std::size_t>(X.cols()) != basis.dimension())
        throw DomainError("vandermonde: point dimension does not match the basis");
    for (Eigen::Index r = 0; r < X.rows(); ++r) {
        if (!basis.box().contains(X.row(r).transpose())) {
            std::ostringstream msg;
            msg << "vandermonde: point " << r << " lies outside the domain box";
            throw DomainError(msg.str());
        }
    }
}

}  // namespace

Vector eval_basis(const BasisSpec& basis, Eigen::Ref<const Vector> x) {
    const Vector xi = to_reference(basis.box(), x);
    std::vector<double> table(basis.dimension() * (basis.degree() + 1));
    Vector out(static_cast<Eigen::Index>(basis.size()));
    fill_row(basis, xi, table, out);
    return out;
}

Matrix vandermonde_serial(const BasisSpec& basis, const PointSet& X) {
    check_points(basis, X);
    Matrix A(X.rows(), static_cast<Eigen::Index>(basis.size()));
    std::vector<double> table(basis.dimension() * (basis.degree() + 1));
    for (Eigen::Index r = 0; r < X.rows(); ++r) {
        const Vector xi = to_reference(basis.box(), X.row(r).transpose());
        auto row = A.row(r);
        fill_row(basis, xi, table, row);
    }
    return A;
}

Matrix vandermonde(const BasisSpec& basis, const PointSet& X) {
    // Validate up front: nothing may throw inside the parallel region.
    check_points(basis, X);
    Matrix A(X.rows(), static_cast<Eigen::Index>(basis.size()));
    const Eigen::Index rows = X.rows();
#pragma omp parallel if (rows >= 512)
    {
        std::vector<double> table(basis.dimension() * (basis.degree() + 1));
#pragma omp for schedule(static)
        for (Eigen::Index r = 0; r < rows; ++r) {
            const Vector xi = to_reference(basis.box(), X.row(r).transpose());
            auto row = A.row(r);
            fill_row(basis, xi, table, row);
        }
    }
    return A;
}

}  // namespace pcetl
