#include "pduu/eigensolver.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "pduu/errors.hpp"
#include "pduu/parallel.hpp"
#include "pduu/prior.hpp"

namespace pduu {
namespace {

Eigen::MatrixXd apply_columns(const LinearMap& op, const Eigen::MatrixXd& x, int workers) {
    Eigen::MatrixXd y(x.rows(), x.cols());
    parallel_for(static_cast<std::size_t>(x.cols()), workers, [&](std::size_t j) {
        const auto c = static_cast<Eigen::Index>(j);
        Vector col = op(x.col(c));
        if (col.size() != x.rows()) throw ArgumentError("operator returned a vector of the wrong size");
        y.col(c) = col;
    });
    return y;
}

}  // namespace

Eigen::MatrixXd b_orthonormalize(const Eigen::MatrixXd& y, const LinearMap& b, double drop_tol) {
    const Eigen::Index n = y.rows();
    Eigen::MatrixXd q(n, y.cols());
    Eigen::MatrixXd bq(n, y.cols());
    Eigen::Index k = 0;
    for (Eigen::Index j = 0; j < y.cols(); ++j) {
        Vector v = y.col(j);
        Vector bv = b(v);
        const double norm0 = std::sqrt(std::max(v.dot(bv), 0.0));
        if (!(norm0 > 0.0)) continue;
        for (int pass = 0; pass < 2 && k > 0; ++pass) {
            const Vector c = bq.leftCols(k).transpose() * v;
            v -= q.leftCols(k) * c;
            bv = b(v);
        }
        const double norm = std::sqrt(std::max(v.dot(bv), 0.0));
        if (!(norm > drop_tol * norm0)) continue;
        q.col(k) = v / norm;
        bq.col(k) = bv / norm;
        ++k;
    }
    return q.leftCols(k);
}

EigenPairs randomized_eigensolve(const GeneralizedPencil& pencil, const RandomizedEigenOptions& opts) {
    const Eigen::Index n = pencil.dimension;
    if (opts.rank < 1) throw ArgumentError("eigensolver rank must be at least 1");
    if (opts.oversampling < 0) throw ArgumentError("oversampling must be nonnegative");
    if (opts.power_iterations < 0) throw ArgumentError("power iteration count must be nonnegative");
    if (opts.rank > n) {
        std::ostringstream os;
        os << "requested rank " << opts.rank << " exceeds the problem dimension " << n;
        throw ArgumentError(os.str());
    }
    if (!pencil.h || !pencil.b || !pencil.b_inverse) throw ArgumentError("pencil is missing an operator");

    const Eigen::Index probes = std::min<Eigen::Index>(n, opts.rank + opts.oversampling);
    const Vector flat = standard_normal(n * probes, opts.seed);
    const Eigen::MatrixXd omega = Eigen::Map<const Eigen::MatrixXd>(flat.data(), n, probes);

    auto sketch = [&](const Eigen::MatrixXd& x) {
        return apply_columns(pencil.b_inverse, apply_columns(pencil.h, x, opts.workers), opts.workers);
    };
    Eigen::MatrixXd q = b_orthonormalize(sketch(omega), pencil.b);
    for (int it = 0; it < opts.power_iterations && q.cols() > 0; ++it) q = b_orthonormalize(sketch(q), pencil.b);

    EigenPairs out;
    // H annihilated every probe; nothing above working precision to report.
    if (q.cols() == 0) return {Vector(0), Eigen::MatrixXd(n, 0)};
    const Eigen::MatrixXd hq = apply_columns(pencil.h, q, opts.workers);
    Eigen::MatrixXd t = q.transpose() * hq;
    t = 0.5 * (t + t.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
    if (es.info() != Eigen::Success) throw SolverError("projected eigenproblem did not converge", INFINITY);

    std::vector<Eigen::Index> order(static_cast<std::size_t>(t.rows()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        return std::abs(es.eigenvalues()[a]) > std::abs(es.eigenvalues()[b]);
    });
    const Eigen::Index keep = std::min<Eigen::Index>(opts.rank, t.rows());
    out.values = Vector::Zero(keep);
    out.vectors = Eigen::MatrixXd::Zero(n, keep);
    for (Eigen::Index i = 0; i < keep; ++i) {
        out.values[i] = es.eigenvalues()[order[static_cast<std::size_t>(i)]];
        out.vectors.col(i) = q * es.eigenvectors().col(order[static_cast<std::size_t>(i)]);
    }
    return out;
}

}  // namespace pduu
