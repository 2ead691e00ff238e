#pragma once

// Forcing operators: the active mode set K (symmetric under negation),
// per-mode amplitudes q_k (explicit table or power law c |k|^{-alpha}),
// the nondegeneracy flags, and the scalar injection rate
// epsbar = 1/2 sum |q~_k|^2.

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "rng.hpp"
#include "spectral_field.hpp"

namespace sflab {

struct ForcingSpec {
    int d = 2;
    std::map<Wavevector, double> table;  // k -> q_k, K = keys (must satisfy K = -K)
    double alpha = 0;                    // recorded decay exponent (0 = explicit table)
    bool assumption_low_modes = false;   // require q_k != 0 for all |k|_inf = 1
    bool assumption_high_modes = false;  // require q_k >= c|k|^{-alpha} for |k|_inf >= L
    int L = 1;

    static double default_alpha(int d) { return 2.5 * d + 0.01; }

    static ForcingSpec power_law(int d, double c, double alpha, int kmax) {
        ForcingSpec s;
        s.d = d;
        s.alpha = alpha;
        for (const auto& k : modes_in_ball(d, kmax))
            s.table[k] = c * std::pow(k.norm(), -alpha);
        return s;
    }
    static ForcingSpec uniform(int d, const std::vector<Wavevector>& half, double q) {
        // `half` lists one representative per +- pair; both halves are filled.
        ForcingSpec s;
        s.d = d;
        for (const auto& k : half) {
            s.table[k] = q;
            s.table[-k] = q;
        }
        return s;
    }

    bool symmetric() const {
        for (const auto& [k, q] : table) {
            auto it = table.find(-k);
            if (it == table.end() || it->second != q) return false;
        }
        return true;
    }
    size_t n_modes() const { return table.size(); }

    // Validation report lines (empty = OK).
    std::vector<std::string> validate() const {
        std::vector<std::string> problems;
        if (table.empty()) problems.push_back("forcing: empty mode set");
        if (!symmetric()) problems.push_back("forcing: mode set not symmetric (K != -K)");
        for (const auto& [k, q] : table)
            if (k.is_zero()) problems.push_back("forcing: zero mode present");
        if (assumption_low_modes) {
            for (const auto& k : modes_in_ball(d, 1)) {
                auto it = table.find(k);
                if (it == table.end() || it->second == 0) {
                    std::string s = "forcing: low-mode nondegeneracy misses k=(";
                    for (int i = 0; i < d; ++i) s += std::to_string(k[i]) + (i + 1 < d ? "," : ")");
                    problems.push_back(s);
                }
            }
        }
        if (assumption_high_modes && alpha <= 2.5 * d)
            problems.push_back("forcing: coloring exponent alpha <= 5d/2 with the infinite family enabled");
        return problems;
    }
};

// Scalar forcing: same table structure, one amplitude per mode.
// Returns the exact injection rate epsbar = 1/2 sum |q~_k|^2.
inline double scalar_injection_rate(const ForcingSpec& spec) {
    if (spec.table.empty()) throw std::invalid_argument("scalar forcing: empty mode set");
    double s = 0;
    for (const auto& [k, q] : spec.table) s += q * q;
    return 0.5 * s;
}

// Stream id encoding: one sub-channel per (mode index, component).
inline uint64_t stream_id(size_t mode_index, int component) {
    return (uint64_t(mode_index) << 8) | uint64_t(component & 0xff);
}

}  // namespace sflab
