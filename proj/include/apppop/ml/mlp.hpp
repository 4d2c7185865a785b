#ifndef APPPOP_ML_MLP_HPP
#define APPPOP_ML_MLP_HPP

// One-hidden-layer perceptron with rectified units, trained by Adam on
// shuffled mini-batches. Classification uses a sigmoid output with
// log-loss; regression a linear output with half mean squared error.

#include <apppop/ml/common.hpp>

#include <numeric>
#include <vector>

namespace apppop::ml {

struct MlpParams {
    int hidden = 64;
    double learning_rate = 1e-3;
    int epochs = 200;
    int batch_size = 16;
    double l2 = 0.0;

    void validate() const
    {
        if (hidden < 1) throw ConfigError("mlp needs at least one hidden unit");
        if (!(learning_rate > 0)) throw ConfigError("mlp learning rate must be > 0");
        if (epochs < 1 || batch_size < 1) throw ConfigError("mlp epochs and batch size must be >= 1");
        if (l2 < 0) throw ConfigError("mlp l2 must be >= 0");
    }

    nlohmann::json to_json() const
    {
        return {{"hidden", hidden}, {"learning_rate", learning_rate}, {"epochs", epochs},
                {"batch_size", batch_size}, {"l2", l2}};
    }

    static MlpParams from_json(const nlohmann::json& j)
    {
        MlpParams p;
        p.hidden = j.value("hidden", p.hidden);
        p.learning_rate = j.value("learning_rate", p.learning_rate);
        p.epochs = j.value("epochs", p.epochs);
        p.batch_size = j.value("batch_size", p.batch_size);
        p.l2 = j.value("l2", p.l2);
        p.validate();
        return p;
    }
};

struct MlpWeights {
    Matrix w1;  // hidden x inputs
    Vector b1;
    Vector w2;  // hidden
    double b2 = 0;

    Eigen::Index size() const { return w1.size() + b1.size() + w2.size() + 1; }

    Vector flatten() const
    {
        Vector v(size());
        Eigen::Index k = 0;
        for (Eigen::Index i = 0; i < w1.size(); ++i) v[k++] = w1.data()[i];
        for (Eigen::Index i = 0; i < b1.size(); ++i) v[k++] = b1[i];
        for (Eigen::Index i = 0; i < w2.size(); ++i) v[k++] = w2[i];
        v[k] = b2;
        return v;
    }

    void assign(const Vector& v)
    {
        Eigen::Index k = 0;
        for (Eigen::Index i = 0; i < w1.size(); ++i) w1.data()[i] = v[k++];
        for (Eigen::Index i = 0; i < b1.size(); ++i) b1[i] = v[k++];
        for (Eigen::Index i = 0; i < w2.size(); ++i) w2[i] = v[k++];
        b2 = v[k];
    }
};

class Mlp {
public:
    Mlp() = default;
    Mlp(Task task, MlpParams params, std::uint64_t seed) : task_(task), params_(params), seed_(seed)
    {
        params_.validate();
    }

    /// Output before the final sigmoid.
    static Vector forward(const MlpWeights& wt, const Matrix& x, Matrix* hidden = nullptr)
    {
        Matrix pre = (x * wt.w1.transpose()).rowwise() + wt.b1.transpose();
        Matrix act = pre.cwiseMax(0.0);
        Vector out = (act * wt.w2).array() + wt.b2;
        if (hidden) *hidden = std::move(act);
        return out;
    }

    /// Mean loss (plus l2/2 on the weight matrices) and its analytic
    /// gradient, in the layout of MlpWeights::flatten().
    static double loss_and_gradient(const MlpWeights& wt, const Matrix& x, const Vector& y, Task task, double l2,
                                    MlpWeights* grad)
    {
        Matrix act;
        const Vector out = forward(wt, x, &act);
        const double n = static_cast<double>(x.rows());
        Vector d_out(out.size());
        double loss = 0;
        if (task == Task::classification) {
            loss = binary_log_loss(out, y);
            for (Eigen::Index i = 0; i < out.size(); ++i) d_out[i] = (sigmoid(out[i]) - y[i]) / n;
        } else {
            const Vector r = out - y;
            loss = 0.5 * r.squaredNorm() / n;
            d_out = r / n;
        }
        loss += 0.5 * l2 * (wt.w1.squaredNorm() + wt.w2.squaredNorm());
        if (grad) {
            grad->w2 = act.transpose() * d_out + l2 * wt.w2;
            grad->b2 = d_out.sum();
            Matrix d_hidden = d_out * wt.w2.transpose();
            d_hidden = d_hidden.cwiseProduct((act.array() > 0.0).cast<double>().matrix());
            grad->w1 = d_hidden.transpose() * x + l2 * wt.w1;
            grad->b1 = d_hidden.colwise().sum().transpose();
        }
        return loss;
    }

    static MlpWeights initial_weights(Eigen::Index inputs, int hidden, Rng& rng)
    {
        MlpWeights wt;
        wt.w1.resize(hidden, inputs);
        wt.b1 = Vector::Zero(hidden);
        wt.w2.resize(hidden);
        const double lim1 = std::sqrt(6.0 / static_cast<double>(inputs + hidden));
        const double lim2 = std::sqrt(6.0 / static_cast<double>(hidden + 1));
        for (Eigen::Index i = 0; i < wt.w1.size(); ++i) wt.w1.data()[i] = (2.0 * rng.uniform() - 1.0) * lim1;
        for (Eigen::Index i = 0; i < wt.w2.size(); ++i) wt.w2[i] = (2.0 * rng.uniform() - 1.0) * lim2;
        wt.b2 = 0;
        return wt;
    }

    void fit(const Matrix& x, const Vector& y)
    {
        Rng rng(seed_);
        weights_ = initial_weights(x.cols(), params_.hidden, rng);
        Vector theta = weights_.flatten();
        Vector m = Vector::Zero(theta.size()), v = Vector::Zero(theta.size());
        const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
        double beta1_t = 1.0, beta2_t = 1.0;
        std::vector<int> order(static_cast<std::size_t>(x.rows()));
        std::iota(order.begin(), order.end(), 0);
        MlpWeights grad = weights_;
        for (int epoch = 0; epoch < params_.epochs; ++epoch) {
            rng.shuffle(order);
            for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(params_.batch_size)) {
                const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(params_.batch_size));
                const auto rows = static_cast<Eigen::Index>(end - start);
                Matrix xb(rows, x.cols());
                Vector yb(rows);
                for (Eigen::Index r = 0; r < rows; ++r) {
                    xb.row(r) = x.row(order[start + static_cast<std::size_t>(r)]);
                    yb[r] = y[order[start + static_cast<std::size_t>(r)]];
                }
                loss_and_gradient(weights_, xb, yb, task_, params_.l2, &grad);
                const Vector g = grad.flatten();
                m = beta1 * m + (1 - beta1) * g;
                v = beta2 * v + (1 - beta2) * g.cwiseProduct(g);
                beta1_t *= beta1;
                beta2_t *= beta2;
                const double lr = params_.learning_rate * std::sqrt(1 - beta2_t) / (1 - beta1_t);
                theta.array() -= lr * m.array() / (v.array().sqrt() + eps);
                weights_.assign(theta);
            }
        }
    }

    Vector predict(const Matrix& x) const
    {
        Vector out = forward(weights_, x);
        if (task_ == Task::classification) out = out.unaryExpr([](double z) { return sigmoid(z); });
        return out;
    }

    const MlpWeights& weights() const { return weights_; }
    void set_weights(MlpWeights w) { weights_ = std::move(w); }
    const MlpParams& params() const { return params_; }

private:
    Task task_ = Task::classification;
    MlpParams params_;
    std::uint64_t seed_ = 0;
    MlpWeights weights_;
};

}  // namespace apppop::ml

#endif  // APPPOP_ML_MLP_HPP
