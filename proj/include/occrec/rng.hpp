#pragma once

#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "occrec/la.hpp"

namespace occrec {

// Deterministic RNG. mt19937_64's stream is pinned by the standard and the
// gaussian transform is hand-rolled, so sequences do not depend on the
// standard library's distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    // [0, 1)
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Box-Muller with a cached spare.
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double t = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(t);
        have_spare_ = true;
        return r * std::cos(t);
    }

    // [0, n)
    int uniform_int(int n) {
        return static_cast<int>((static_cast<unsigned __int128>(eng_()) *
                                 static_cast<std::uint64_t>(n)) >> 64);
    }

    Vec gaussian_vec(int d) {
        Vec v(d);
        for (auto& x : v) x = gaussian();
        return v;
    }

    Vec unit_vec(int d) {
        for (;;) {
            Vec v = gaussian_vec(d);
            const double n = norm(v);
            if (n > 1e-12) {
                for (auto& x : v) x /= n;
                return v;
            }
        }
    }

    // unit vector in the non-negative orthant
    Vec unit_nonneg_vec(int d) {
        Vec v = unit_vec(d);
        for (auto& x : v) x = std::abs(x);
        return v;
    }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) {
            const int j = uniform_int(i + 1);
            std::swap(v[i], v[j]);
        }
    }

private:
    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace occrec
