// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "sdpm/error.hpp"

namespace sdpm {

/// Split-chain potential scale reduction factor. Each trace is cut into two
/// halves (a trailing odd element is dropped) and the halves are treated as
/// separate chains. Identical traces give 1 by convention, as do traces with
/// zero within- and between-chain variance.
inline double gelman_rubin(const std::vector<std::vector<double>>& traces) {
    if (traces.size() < 2) throw ArgumentError("gelman_rubin: need at least two traces");
    const std::size_t len = traces.front().size();
    for (const auto& t : traces)
        if (t.size() != len) throw ArgumentError("gelman_rubin: traces must have equal length");
    if (len < 10) throw ArgumentError("gelman_rubin: traces must have length >= 10");

    bool identical = true;
    for (const auto& t : traces) identical = identical && t == traces.front();
    if (identical) return 1.0;  // chains that coincide carry no between-chain evidence

    const std::size_t half = len / 2;
    std::vector<double> means;
    std::vector<double> vars;
    for (const auto& t : traces) {
        for (std::size_t part = 0; part < 2; ++part) {
            const std::size_t begin = part * half;
            double m = 0.0;
            for (std::size_t i = begin; i < begin + half; ++i) m += t[i];
            m /= static_cast<double>(half);
            double v = 0.0;
            for (std::size_t i = begin; i < begin + half; ++i) v += (t[i] - m) * (t[i] - m);
            means.push_back(m);
            vars.push_back(v / static_cast<double>(half - 1));
        }
    }
    const double m_chains = static_cast<double>(means.size());
    const double n = static_cast<double>(half);
    double grand = 0.0;
    for (double m : means) grand += m;
    grand /= m_chains;
    double b = 0.0;
    for (double m : means) b += (m - grand) * (m - grand);
    b *= n / (m_chains - 1.0);
    double w = 0.0;
    for (double v : vars) w += v;
    w /= m_chains;

    if (w == 0.0) return b == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
    const double var_plus = (n - 1.0) / n * w + b / n;
    return std::sqrt(var_plus / w);
}

}  // namespace sdpm
