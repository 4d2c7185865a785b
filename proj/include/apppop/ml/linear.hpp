#ifndef APPPOP_ML_LINEAR_HPP
#define APPPOP_ML_LINEAR_HPP

// Linear models: logistic regression (L2 by damped Newton, L1 via proximal
// gradient steps),
// lasso by coordinate descent, closed-form ridge, and a linear hinge-loss
// machine used by the elimination selector.

#include <apppop/ml/common.hpp>

#include <Eigen/Cholesky>

#include <cmath>

namespace apppop::ml {

struct LogisticParams {
    double l2 = 1e-2;
    double l1 = 0.0;
    int epochs = 500;
    double step = 0.1;

    void validate() const
    {
        if (l2 < 0 || l1 < 0) throw ConfigError("logistic regression penalties must be >= 0");
        if (epochs < 1) throw ConfigError("logistic regression needs epochs >= 1");
        if (!(step > 0)) throw ConfigError("logistic regression step must be > 0");
    }

    nlohmann::json to_json() const { return {{"l2", l2}, {"l1", l1}, {"epochs", epochs}, {"step", step}}; }

    static LogisticParams from_json(const nlohmann::json& j)
    {
        LogisticParams p;
        p.l2 = j.value("l2", p.l2);
        p.l1 = j.value("l1", p.l1);
        p.epochs = j.value("epochs", p.epochs);
        p.step = j.value("step", p.step);
        p.validate();
        return p;
    }
};

/// Binary logistic regression on mean log-loss + l2/2 * |w|^2. Without an L1
/// term the objective is smooth and is minimized by damped Newton steps; with
/// l1 > 0 it runs `epochs` proximal gradient steps of size `step`.
class LogisticRegression {
public:
    LogisticRegression() = default;
    explicit LogisticRegression(LogisticParams p) : params_(p) { params_.validate(); }

    /// Smooth part of the objective (log-loss and L2 term).
    static double loss(const Matrix& x, const Vector& y, const Vector& w, double b, double l2)
    {
        const Vector logits = (x * w).array() + b;
        return binary_log_loss(logits, y) + 0.5 * l2 * w.squaredNorm();
    }

    /// Analytic gradient of `loss` with respect to (w, b).
    static void gradient(const Matrix& x, const Vector& y, const Vector& w, double b, double l2, Vector& grad_w,
                         double& grad_b)
    {
        const Vector logits = (x * w).array() + b;
        Vector residual(y.size());
        for (Eigen::Index i = 0; i < y.size(); ++i) residual[i] = sigmoid(logits[i]) - y[i];
        const double n = static_cast<double>(y.size());
        grad_w = x.transpose() * residual / n + l2 * w;
        grad_b = residual.sum() / n;
    }

    void fit(const Matrix& x, const Vector& y)
    {
        weights_ = Vector::Zero(x.cols());
        bias_ = 0;
        if (params_.l1 == 0) {
            fit_newton(x, y);
            return;
        }
        Vector gw;
        double gb = 0;
        for (int epoch = 0; epoch < params_.epochs; ++epoch) {
            gradient(x, y, weights_, bias_, params_.l2, gw, gb);
            weights_ -= params_.step * gw;
            bias_ -= params_.step * gb;
            if (params_.l1 > 0) {
                const double t = params_.step * params_.l1;
                weights_ = weights_.unaryExpr([t](double v) { return std::copysign(std::max(std::abs(v) - t, 0.0), v); });
            }
        }
    }

    Vector decision(const Matrix& x) const { return (x * weights_).array() + bias_; }

    Vector predict_proba(const Matrix& x) const { return decision(x).unaryExpr([](double z) { return sigmoid(z); }); }

    const Vector& weights() const { return weights_; }
    double bias() const { return bias_; }
    void set(Vector w, double b)
    {
        weights_ = std::move(w);
        bias_ = b;
    }
    const LogisticParams& params() const { return params_; }

private:
    static constexpr int kNewtonIterations = 100;
    static constexpr double kGradientTolerance = 1e-10;

    /// Newton direction on (w, b) with a backtracking (Armijo) line search.
    /// The tiny diagonal jitter keeps the Hessian invertible when l2 = 0.
    void fit_newton(const Matrix& x, const Vector& y)
    {
        const auto d = x.cols();
        const double n = static_cast<double>(y.size());
        Matrix design(x.rows(), d + 1);
        design << x, Vector::Ones(x.rows());
        Vector theta = Vector::Zero(d + 1);
        Vector gw;
        double gb = 0;
        double current = loss(x, y, weights_, bias_, params_.l2);
        for (int iter = 0; iter < kNewtonIterations; ++iter) {
            gradient(x, y, weights_, bias_, params_.l2, gw, gb);
            Vector grad(d + 1);
            grad << gw, gb;
            if (grad.cwiseAbs().maxCoeff() < kGradientTolerance) break;
            const Vector logits = design * theta;
            Vector curvature(logits.size());
            for (Eigen::Index i = 0; i < logits.size(); ++i) {
                const double p = sigmoid(logits[i]);
                curvature[i] = p * (1 - p) / n;
            }
            Matrix hessian = design.transpose() * curvature.asDiagonal() * design;
            hessian.diagonal().head(d).array() += params_.l2;
            hessian.diagonal().array() += 1e-10;
            const Vector direction = hessian.ldlt().solve(grad);
            const double slope = grad.dot(direction);
            double t = 1.0;
            Vector candidate = theta - direction;
            double next = loss(x, y, candidate.head(d), candidate[d], params_.l2);
            while (next > current - 1e-4 * t * slope && t > 1e-12) {
                t *= 0.5;
                candidate = theta - t * direction;
                next = loss(x, y, candidate.head(d), candidate[d], params_.l2);
            }
            if (!(next < current)) break;
            theta = candidate;
            weights_ = theta.head(d);
            bias_ = theta[d];
            current = next;
        }
    }

    LogisticParams params_;
    Vector weights_;
    double bias_ = 0;
};

/// Solves (X^T X + lambda I) w = X^T y.
inline Vector ridge_solve(const Matrix& x, const Vector& y, double lambda)
{
    Matrix gram = x.transpose() * x;
    gram.diagonal().array() += lambda;
    return gram.ldlt().solve(x.transpose() * y);
}

/// Ridge regression with an unpenalized intercept (centered closed form).
class Ridge {
public:
    explicit Ridge(double lambda = 1.0) : lambda_(lambda)
    {
        if (lambda < 0) throw ConfigError("ridge lambda must be >= 0");
    }

    void fit(const Matrix& x, const Vector& y)
    {
        const Vector x_mean = x.colwise().mean().transpose();
        const double y_mean = y.mean();
        const Matrix centered = x.rowwise() - x_mean.transpose();
        weights_ = ridge_solve(centered, y.array() - y_mean, lambda_);
        bias_ = y_mean - x_mean.dot(weights_);
    }

    Vector predict(const Matrix& x) const { return (x * weights_).array() + bias_; }

    const Vector& weights() const { return weights_; }
    double bias() const { return bias_; }
    double lambda() const { return lambda_; }
    void set(Vector w, double b)
    {
        weights_ = std::move(w);
        bias_ = b;
    }

private:
    double lambda_;
    Vector weights_;
    double bias_ = 0;
};

/// Lasso by cyclic coordinate descent on (1/2n)|y - b - Xw|^2 + lambda |w|_1.
class Lasso {
public:
    explicit Lasso(double lambda = 1e-2, int max_sweeps = 1000, double tolerance = 1e-9)
        : lambda_(lambda), max_sweeps_(max_sweeps), tolerance_(tolerance)
    {
        if (lambda < 0) throw ConfigError("lasso lambda must be >= 0");
    }

    void fit(const Matrix& x, const Vector& y)
    {
        const double n = static_cast<double>(x.rows());
        const Vector x_mean = x.colwise().mean().transpose();
        const double y_mean = y.mean();
        const Matrix xc = x.rowwise() - x_mean.transpose();
        Vector residual = y.array() - y_mean;
        weights_ = Vector::Zero(x.cols());
        const Vector col_sq = xc.colwise().squaredNorm().transpose() / n;
        for (int sweep = 0; sweep < max_sweeps_; ++sweep) {
            double max_change = 0;
            for (Eigen::Index j = 0; j < x.cols(); ++j) {
                if (col_sq[j] <= 1e-24) continue;
                const double old = weights_[j];
                const double rho = xc.col(j).dot(residual) / n + col_sq[j] * old;
                const double updated = std::copysign(std::max(std::abs(rho) - lambda_, 0.0), rho) / col_sq[j];
                if (updated != old) {
                    residual -= (updated - old) * xc.col(j);
                    weights_[j] = updated;
                    max_change = std::max(max_change, std::abs(updated - old));
                }
            }
            if (max_change < tolerance_) break;
        }
        bias_ = y_mean - x_mean.dot(weights_);
    }

    Vector predict(const Matrix& x) const { return (x * weights_).array() + bias_; }

    const Vector& weights() const { return weights_; }
    double bias() const { return bias_; }
    double lambda() const { return lambda_; }
    void set(Vector w, double b)
    {
        weights_ = std::move(w);
        bias_ = b;
    }

private:
    double lambda_;
    int max_sweeps_;
    double tolerance_;
    Vector weights_;
    double bias_ = 0;
};

/// Linear max-margin model trained by full-batch subgradient descent with
/// iterate averaging. Classification uses the hinge loss on targets mapped
/// to -1/+1; regression uses the epsilon-insensitive loss.
class LinearSvm {
public:
    LinearSvm(Task task, double lambda = 1e-2, int epochs = 300, double epsilon = 0.1)
        : task_(task), lambda_(lambda), epochs_(epochs), epsilon_(epsilon)
    {
    }

    void fit(const Matrix& x, const Vector& y)
    {
        const double n = static_cast<double>(x.rows());
        Vector target = y;
        if (task_ == Task::classification) target = (2.0 * y.array() - 1.0).matrix();
        Vector w = Vector::Zero(x.cols());
        double b = 0;
        Vector w_avg = Vector::Zero(x.cols());
        double b_avg = 0;
        Vector coef(x.rows());
        for (int t = 1; t <= epochs_; ++t) {
            const Vector out = (x * w).array() + b;
            for (Eigen::Index i = 0; i < x.rows(); ++i) {
                if (task_ == Task::classification) {
                    coef[i] = target[i] * out[i] < 1.0 ? -target[i] : 0.0;
                } else {
                    const double r = out[i] - target[i];
                    coef[i] = r > epsilon_ ? 1.0 : (r < -epsilon_ ? -1.0 : 0.0);
                }
            }
            const Vector gw = x.transpose() * coef / n + lambda_ * w;
            const double gb = coef.sum() / n;
            const double eta = 0.5 / std::sqrt(static_cast<double>(t));
            w -= eta * gw;
            b -= eta * gb;
            w_avg += (w - w_avg) / t;
            b_avg += (b - b_avg) / t;
        }
        weights_ = w_avg;
        bias_ = b_avg;
    }

    const Vector& weights() const { return weights_; }
    double bias() const { return bias_; }

private:
    Task task_;
    double lambda_;
    int epochs_;
    double epsilon_;
    Vector weights_;
    double bias_ = 0;
};

}  // namespace apppop::ml

#endif  // APPPOP_ML_LINEAR_HPP
