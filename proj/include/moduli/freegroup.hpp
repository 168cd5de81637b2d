#pragma once

// Freely reduced words over an integer generator alphabet.  Shared by the
// coset tables (cusp zeta-series), the monodromy bookkeeping, and the exact
// chain algebra.  Words are stored as runs (generator, nonzero exponent) with
// adjacent runs always merged, so equality is plain structural equality.

#include <compare>
#include <cstdint>
#include <functional>
#include <vector>

#include "moduli/numerics.hpp"

namespace moduli {

struct Word {
    struct Syllable {
        int gen = 0;
        int exp = 0;
        auto operator<=>(const Syllable&) const = default;
    };
    std::vector<Syllable> syl;

    Word() = default;

    static Word identity() { return {}; }
    static Word generator(int g, int e = 1) {
        Word w;
        if (e != 0) w.syl.push_back({g, e});
        return w;
    }

    bool is_identity() const { return syl.empty(); }

    int length() const {
        int n = 0;
        for (const auto& s : syl) n += std::abs(s.exp);
        return n;
    }

    void push_syllable(int g, int e) {
        if (e == 0) return;
        if (!syl.empty() && syl.back().gen == g) {
            syl.back().exp += e;
            if (syl.back().exp == 0) syl.pop_back();
        } else {
            syl.push_back({g, e});
        }
    }

    friend Word operator*(const Word& l, const Word& r) {
        Word out = l;
        for (const auto& s : r.syl) out.push_syllable(s.gen, s.exp);
        return out;
    }

    Word inverse() const {
        Word out;
        for (auto it = syl.rbegin(); it != syl.rend(); ++it) out.syl.push_back({it->gen, -it->exp});
        return out;
    }

    Word pow(int e) const {
        Word out;
        const Word& base = *this;
        Word b = e >= 0 ? base : base.inverse();
        for (int i = 0; i < std::abs(e); ++i) out = out * b;
        return out;
    }

    // Exponent of the maximal leading power of generator g: w = g^k * rest
    // with rest not starting with g^{+-1}.  Used for coset canonical forms.
    int leading_power(int g) const {
        if (syl.empty() || syl.front().gen != g) return 0;
        return syl.front().exp;
    }

    Word strip_leading(int g) const {
        if (syl.empty() || syl.front().gen != g) return *this;
        Word out = *this;
        out.syl.erase(out.syl.begin());
        return out;
    }

    // Letters as signed generator indices: +g for g, -(g+1) encoded via pairs.
    // Letter layout: (gen, +-1) expanded run by run.
    std::vector<std::pair<int, int>> letters() const {
        std::vector<std::pair<int, int>> out;
        for (const auto& s : syl) {
            int sign = s.exp > 0 ? 1 : -1;
            for (int i = 0; i < std::abs(s.exp); ++i) out.emplace_back(s.gen, sign);
        }
        return out;
    }

    static Word from_letters(const std::vector<std::pair<int, int>>& ls) {
        Word w;
        for (auto [g, sgn] : ls) w.push_syllable(g, sgn);
        return w;
    }

    // Homomorphism: substitute images[g] for generator g.
    Word substitute(const std::vector<Word>& images) const {
        Word out;
        for (const auto& s : syl) out = out * images.at(static_cast<size_t>(s.gen)).pow(s.exp);
        return out;
    }

    auto operator<=>(const Word&) const = default;
};

// Ordering by (length, then syllable sequence); canonical-form ties are broken
// deterministically.
inline bool shorter_then_lex(const Word& a, const Word& b) {
    int la = a.length(), lb = b.length();
    if (la != lb) return la < lb;
    return a.syl < b.syl;
}

struct WordHash {
    size_t operator()(const Word& w) const {
        size_t h = 0x9e3779b97f4a7c15ull;
        for (const auto& s : w.syl) {
            h ^= std::hash<long long>()((static_cast<long long>(s.gen) << 32) ^
                                        static_cast<long long>(s.exp & 0xffffffffLL)) +
                 0x9e3779b9 + (h << 6) + (h >> 2);
        }
        return h;
    }
};

}  // namespace moduli
