#pragma once

#include <charconv>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace tangle {

// Age-weight function g(s) for tip selection, together with its running
// integral. Three closed-form families cover the policies used here:
//
//   constant{c}     g(s) = c          (uniform selection; not integrable)
//   exp{beta}       g(s) = e^{-beta s} (recency-biased selection)
//   window{w}       g(s) = 1 for s < w, else 0 (compact support)
//
// The running integral is exact, which the fluid and steady solvers rely on
// for their startup normalizers.
class WeightFunction {
public:
    enum class Kind { Constant, ExpDecay, Window };

    static WeightFunction constant(double c = 1.0) {
        if (c <= 0.0) throw std::invalid_argument("weight constant{c}: c must be > 0");
        return WeightFunction(Kind::Constant, c);
    }
    static WeightFunction exp_decay(double beta) {
        if (beta <= 0.0) throw std::invalid_argument("weight exp{beta}: beta must be > 0");
        return WeightFunction(Kind::ExpDecay, beta);
    }
    static WeightFunction window(double width) {
        if (width <= 0.0) throw std::invalid_argument("weight window{w}: width must be > 0");
        return WeightFunction(Kind::Window, width);
    }

    Kind kind() const { return kind_; }
    double param() const { return param_; }

    double operator()(double s) const {
        switch (kind_) {
            case Kind::Constant: return param_;
            case Kind::ExpDecay: return std::exp(-param_ * s);
            case Kind::Window: return s < param_ ? 1.0 : 0.0;
        }
        return 0.0;
    }

    // Running integral over [0, s].
    double integral(double s) const {
        if (s <= 0.0) return 0.0;
        switch (kind_) {
            case Kind::Constant: return param_ * s;
            case Kind::ExpDecay: return (1.0 - std::exp(-param_ * s)) / param_;
            case Kind::Window: return s < param_ ? s : param_;
        }
        return 0.0;
    }

    // Integral over [0, inf); +inf for the constant family.
    double total() const {
        switch (kind_) {
            case Kind::Constant: return std::numeric_limits<double>::infinity();
            case Kind::ExpDecay: return 1.0 / param_;
            case Kind::Window: return param_;
        }
        return 0.0;
    }

    bool integrable() const { return kind_ != Kind::Constant; }

    // Smallest s with total() - integral(s) <= eps * total(). Used to place
    // quadrature truncation points for integrable weights.
    double tail_cutoff(double eps) const {
        switch (kind_) {
            case Kind::Constant:
                throw std::logic_error("tail_cutoff: constant weight has no finite tail");
            case Kind::ExpDecay:
                return -std::log(eps) / param_;
            case Kind::Window:
                return param_;
        }
        return 0.0;
    }

    std::string to_string() const;

    bool operator==(const WeightFunction& o) const {
        return kind_ == o.kind_ && param_ == o.param_;
    }

private:
    WeightFunction(Kind k, double p) : kind_(k), param_(p) {}

    Kind kind_ = Kind::Constant;
    double param_ = 1.0;
};

inline std::string WeightFunction::to_string() const {
    auto num = [](double v) {
        char buf[32];
        auto res = std::to_chars(buf, buf + sizeof(buf), v);
        return std::string(buf, res.ptr);
    };
    switch (kind_) {
        case Kind::Constant: return "const{" + num(param_) + "}";
        case Kind::ExpDecay: return "exp{" + num(param_) + "}";
        case Kind::Window: return "window{" + num(param_) + "}";
    }
    return "?";
}

}  // namespace tangle
