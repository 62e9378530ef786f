#include "gradmrf/reference.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

namespace gradmrf::ref {

namespace {

Eigen::MatrixXd to_eigen(const DenseMatrix& m, std::size_t n) {
    Eigen::MatrixXd out(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m[i * n + j];
    return out;
}

}  // namespace

SpectrumGrid dft3_naive(const TensorGrid& t) {
    const Shape3 s = t.shape();
    SpectrumGrid out(s);
    const double two_pi = 2.0 * std::numbers::pi;
    for (int kc = 0; kc < s.c; ++kc)
        for (int kh = 0; kh < s.h; ++kh)
            for (int kw = 0; kw < s.w; ++kw) {
                std::complex<double> acc{0.0, 0.0};
                for (int ic = 0; ic < s.c; ++ic)
                    for (int ih = 0; ih < s.h; ++ih)
                        for (int iw = 0; iw < s.w; ++iw) {
                            const double phase =
                                -two_pi * (static_cast<double>(kc) * ic / s.c +
                                           static_cast<double>(kh) * ih / s.h +
                                           static_cast<double>(kw) * iw / s.w);
                            acc += t.at(ic, ih, iw) *
                                   std::complex<double>(std::cos(phase), std::sin(phase));
                        }
                out.at(kc, kh, kw) = acc;
            }
    return out;
}

DenseMatrix dense_lambda(const StencilSpec& spec, const ParamVector& theta, Shape3 shape) {
    const std::size_t n = shape.total();
    DenseMatrix m(n * n, 0.0);
    for (int ic = 0; ic < shape.c; ++ic)
        for (int ih = 0; ih < shape.h; ++ih)
            for (int iw = 0; iw < shape.w; ++iw) {
                const std::size_t row =
                    (static_cast<std::size_t>(ic) * shape.h + ih) * shape.w + iw;
                for (const auto& e : spec.entries()) {
                    const std::size_t col =
                        (static_cast<std::size_t>(wrap_index(ic + e.offset.dc, shape.c)) *
                             shape.h +
                         wrap_index(ih + e.offset.dh, shape.h)) *
                            shape.w +
                        wrap_index(iw + e.offset.dw, shape.w);
                    m[row * n + col] += theta[static_cast<std::size_t>(e.param)];
                }
            }
    return m;
}

TensorGrid dense_matvec(const DenseMatrix& m, const TensorGrid& v) {
    const std::size_t n = v.size();
    TensorGrid out(v.shape());
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += m[i * n + j] * v[j];
        out[i] = acc;
    }
    return out;
}

std::vector<double> dense_symmetric_eigenvalues(const DenseMatrix& m, std::size_t n) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(to_eigen(m, n),
                                                      Eigen::EigenvaluesOnly);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = es.eigenvalues()(static_cast<Eigen::Index>(i));
    return out;
}

double dense_logdet(const DenseMatrix& m, std::size_t n) {
    Eigen::LLT<Eigen::MatrixXd> llt(to_eigen(m, n));
    if (llt.info() != Eigen::Success)
        throw NotPositiveDefiniteError("dense_logdet: matrix is not positive definite");
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        acc += 2.0 * std::log(llt.matrixL()(static_cast<Eigen::Index>(i),
                                            static_cast<Eigen::Index>(i)));
    return acc;
}

TensorGrid dense_solve(const DenseMatrix& m, const TensorGrid& b) {
    const std::size_t n = b.size();
    Eigen::LLT<Eigen::MatrixXd> llt(to_eigen(m, n));
    if (llt.info() != Eigen::Success)
        throw NotPositiveDefiniteError("dense_solve: matrix is not positive definite");
    Eigen::VectorXd rhs(n);
    for (std::size_t i = 0; i < n; ++i) rhs(static_cast<Eigen::Index>(i)) = b[i];
    Eigen::VectorXd x = llt.solve(rhs);
    TensorGrid out(b.shape());
    for (std::size_t i = 0; i < n; ++i) out[i] = x(static_cast<Eigen::Index>(i));
    return out;
}

DenseMatrix dense_inverse(const DenseMatrix& m, std::size_t n) {
    Eigen::MatrixXd inv = to_eigen(m, n).inverse();
    DenseMatrix out(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            out[i * n + j] = inv(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    return out;
}

namespace {

Eigen::MatrixXd posterior_system(const StencilSpec& spec, const ParamVector& theta, Shape3 shape,
                                 const std::vector<TensorGrid>& directions, double sigma2) {
    const std::size_t n = shape.total();
    Eigen::MatrixXd a = to_eigen(dense_lambda(spec, theta, shape), n);
    for (const auto& x : directions) {
        Eigen::VectorXd xv(n);
        for (std::size_t i = 0; i < n; ++i) xv(static_cast<Eigen::Index>(i)) = x[i];
        a += xv * xv.transpose() / sigma2;
    }
    return a;
}

}  // namespace

TensorGrid dense_posterior_mean(const StencilSpec& spec, const ParamVector& theta, Shape3 shape,
                                const std::vector<TensorGrid>& directions,
                                const std::vector<double>& loss_diffs, double sigma2) {
    const std::size_t n = shape.total();
    Eigen::MatrixXd a = posterior_system(spec, theta, shape, directions, sigma2);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    for (std::size_t k = 0; k < directions.size(); ++k) {
        for (std::size_t i = 0; i < n; ++i)
            rhs(static_cast<Eigen::Index>(i)) += directions[k][i] * loss_diffs[k] / sigma2;
    }
    Eigen::VectorXd x = a.llt().solve(rhs);
    TensorGrid out(shape);
    for (std::size_t i = 0; i < n; ++i) out[i] = x(static_cast<Eigen::Index>(i));
    return out;
}

TensorGrid dense_posterior_apply(const StencilSpec& spec, const ParamVector& theta, Shape3 shape,
                                 const std::vector<TensorGrid>& directions, double sigma2,
                                 const TensorGrid& v) {
    const std::size_t n = shape.total();
    Eigen::MatrixXd a = posterior_system(spec, theta, shape, directions, sigma2);
    Eigen::VectorXd rhs(n);
    for (std::size_t i = 0; i < n; ++i) rhs(static_cast<Eigen::Index>(i)) = v[i];
    Eigen::VectorXd x = a.llt().solve(rhs);
    TensorGrid out(shape);
    for (std::size_t i = 0; i < n; ++i) out[i] = x(static_cast<Eigen::Index>(i));
    return out;
}

}  // namespace gradmrf::ref
