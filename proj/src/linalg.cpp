#include "mfm/linalg.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "mfm/errors.hpp"

namespace mfm {

namespace {

void require_square(const DenseArray& a, const char* where) {
    if (a.rank() != 2 || a.shape()[0] != a.shape()[1]) {
        throw ShapeError(std::string(where) + ": expected a square matrix, got " +
                         shape_str(a.shape()));
    }
}

}  // namespace

DenseArray matrix_sqrt_psd(const DenseArray& a) {
    require_square(a, "matrix_sqrt_psd");
    const std::size_t n = a.shape()[0];

    Eigen::MatrixXd m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            m(i, j) = 0.5 * (a.at2(i, j) + a.at2(j, i));
        }
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
    if (solver.info() != Eigen::Success) {
        throw NumericError("matrix_sqrt_psd: eigendecomposition failed");
    }
    Eigen::VectorXd evals = solver.eigenvalues();
    for (Eigen::Index i = 0; i < evals.size(); ++i) {
        if (evals(i) < -1e-6) {
            throw NotPsdError("matrix_sqrt_psd: eigenvalue " + std::to_string(evals(i)) +
                              " below -1e-6, input is not PSD");
        }
        evals(i) = evals(i) > 0.0 ? std::sqrt(evals(i)) : 0.0;
    }
    Eigen::MatrixXd root =
        solver.eigenvectors() * evals.asDiagonal() * solver.eigenvectors().transpose();

    DenseArray out({n, n});
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) out.at2(i, j) = root(i, j);
    }
    return out;
}

DenseArray column_means(const DenseArray& x) {
    if (x.rank() != 2) throw ShapeError("column_means: expected rank 2");
    const std::size_t n = x.shape()[0];
    const std::size_t d = x.shape()[1];
    if (n == 0) throw ShapeError("column_means: empty matrix");
    DenseArray mu({d});
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) mu[j] += x.at2(i, j);
    }
    for (std::size_t j = 0; j < d; ++j) mu[j] /= static_cast<double>(n);
    return mu;
}

DenseArray covariance(const DenseArray& x) {
    if (x.rank() != 2) throw ShapeError("covariance: expected rank 2");
    const std::size_t n = x.shape()[0];
    const std::size_t d = x.shape()[1];
    if (n < 2) throw ShapeError("covariance: need at least 2 rows");
    const DenseArray mu = column_means(x);
    DenseArray cov({d, d});
    std::vector<double> centered(d);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) centered[j] = x.at2(i, j) - mu[j];
        for (std::size_t j = 0; j < d; ++j) {
            const double cj = centered[j];
            for (std::size_t k = j; k < d; ++k) cov.at2(j, k) += cj * centered[k];
        }
    }
    const double scale = 1.0 / static_cast<double>(n - 1);
    for (std::size_t j = 0; j < d; ++j) {
        for (std::size_t k = j; k < d; ++k) {
            cov.at2(j, k) *= scale;
            cov.at2(k, j) = cov.at2(j, k);
        }
    }
    return cov;
}

double trace(const DenseArray& a) {
    require_square(a, "trace");
    double t = 0.0;
    for (std::size_t i = 0; i < a.shape()[0]; ++i) t += a.at2(i, i);
    return t;
}

DenseArray matmul2(const DenseArray& a, const DenseArray& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.shape()[1] != b.shape()[0]) {
        throw ShapeError("matmul2: incompatible shapes " + shape_str(a.shape()) + " x " +
                         shape_str(b.shape()));
    }
    const std::size_t m = a.shape()[0];
    const std::size_t k = a.shape()[1];
    const std::size_t n = b.shape()[1];
    DenseArray c({m, n});
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
            const double av = a.at2(i, p);
            for (std::size_t j = 0; j < n; ++j) c.at2(i, j) += av * b.at2(p, j);
        }
    }
    return c;
}

double frobenius_norm(const DenseArray& a) { return l2_norm(a); }

}  // namespace mfm
