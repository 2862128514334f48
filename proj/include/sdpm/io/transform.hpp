// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cmath>
#include <string>

#include "sdpm/io/csv.hpp"

namespace sdpm {

/// Elementwise marker transform. Spec strings: "none", "arcsinh",
/// "arcsinh:<cofactor>" (default cofactor 150), "boxcox:<lambda>".
struct TransformSpec {
    enum class Kind { none, arcsinh, box_cox };
    Kind kind = Kind::none;
    double param = 0.0;

    static TransformSpec none() { return {}; }
    static TransformSpec arcsinh(double cofactor = 150.0) {
        if (!(cofactor > 0.0) || !std::isfinite(cofactor)) throw ConfigError("arcsinh cofactor must be positive");
        return {Kind::arcsinh, cofactor};
    }
    static TransformSpec box_cox(double lambda) {
        if (!std::isfinite(lambda)) throw ConfigError("Box-Cox lambda must be finite");
        return {Kind::box_cox, lambda};
    }

    static TransformSpec parse(const std::string& s) {
        const auto colon = s.find(':');
        const std::string name = s.substr(0, colon);
        const bool has_arg = colon != std::string::npos;
        double arg = 0.0;
        if (has_arg && !detail::parse_double(s.substr(colon + 1), arg)) {
            throw ConfigError("bad transform parameter in '" + s + "'");
        }
        if (name == "none" && !has_arg) return none();
        if (name == "arcsinh" || name == "asinh") return has_arg ? arcsinh(arg) : arcsinh();
        if ((name == "boxcox" || name == "box-cox") && has_arg) return box_cox(arg);
        throw ConfigError("unknown transform '" + s + "'");
    }

    std::string to_string() const {
        switch (kind) {
            case Kind::arcsinh: return "arcsinh:" + format_double(param);
            case Kind::box_cox: return "boxcox:" + format_double(param);
            default: return "none";
        }
    }

    double apply(double x) const {
        switch (kind) {
            case Kind::arcsinh: return std::asinh(x / param);
            case Kind::box_cox:
                if (param <= 0.0 ? !(x > 0.0) : !(x >= 0.0)) {
                    throw ArgumentError("Box-Cox transform undefined for x = " + format_double(x) +
                                        " with lambda = " + format_double(param));
                }
                return param == 0.0 ? std::log(x) : (std::pow(x, param) - 1.0) / param;
            default: return x;
        }
    }

    double inverse(double y) const {
        switch (kind) {
            case Kind::arcsinh: return param * std::sinh(y);
            case Kind::box_cox: {
                if (param == 0.0) return std::exp(y);
                const double base = param * y + 1.0;
                if (!(base >= 0.0)) throw ArgumentError("Box-Cox inverse outside the transform range");
                return std::pow(base, 1.0 / param);
            }
            default: return y;
        }
    }
};

inline DataMatrix transform(const DataMatrix& data, const TransformSpec& spec) {
    if (spec.kind == TransformSpec::Kind::none) return data;
    Mat v = data.values().unaryExpr([&](double x) { return spec.apply(x); });
    if (!v.allFinite()) throw ArgumentError("transform produced a non-finite value");
    return DataMatrix(std::move(v), data.names());
}

inline DataMatrix inverse_transform(const DataMatrix& data, const TransformSpec& spec) {
    if (spec.kind == TransformSpec::Kind::none) return data;
    Mat v = data.values().unaryExpr([&](double y) { return spec.inverse(y); });
    if (!v.allFinite()) throw ArgumentError("inverse transform produced a non-finite value");
    return DataMatrix(std::move(v), data.names());
}

}  // namespace sdpm
