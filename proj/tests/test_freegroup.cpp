#include <catch2/catch_amalgamated.hpp>

#include "moduli/freegroup.hpp"

using namespace moduli;

TEST_CASE("free reduction and syllable merging") {
    Word a = Word::generator(0), b = Word::generator(1);
    REQUIRE((a * a.inverse()).is_identity());
    Word w = a * b * b * a.inverse();
    REQUIRE(w.length() == 4);
    REQUIRE(w.syl.size() == 3);
    Word u = a * a * a;
    REQUIRE(u.syl.size() == 1);
    REQUIRE(u.syl[0].exp == 3);
}

TEST_CASE("inverse reverses and negates") {
    Word a = Word::generator(0), b = Word::generator(1);
    Word w = a * b.pow(-2) * a;
    Word wi = w.inverse();
    REQUIRE((w * wi).is_identity());
    REQUIRE((wi * w).is_identity());
    REQUIRE((a * b).inverse() == b.inverse() * a.inverse());
}

TEST_CASE("leading power stripping") {
    Word a = Word::generator(0), b = Word::generator(1);
    Word w = a.pow(3) * b * a;
    REQUIRE(w.leading_power(0) == 3);
    REQUIRE(w.leading_power(1) == 0);
    Word s = w.strip_leading(0);
    REQUIRE(s == b * a);
}

TEST_CASE("letters round trip") {
    Word a = Word::generator(0), b = Word::generator(1);
    Word w = a.pow(2) * b.inverse() * a.pow(-1);
    auto ls = w.letters();
    REQUIRE(ls.size() == 4);
    REQUIRE(Word::from_letters(ls) == w);
}

TEST_CASE("substitution is a homomorphism") {
    Word a = Word::generator(0), b = Word::generator(1);
    std::vector<Word> images = {b * a, a.inverse()};
    Word w = a * b * a.inverse();
    Word u = b.pow(2) * a;
    REQUIRE((w * u).substitute(images) == w.substitute(images) * u.substitute(images));
    REQUIRE(w.inverse().substitute(images) == w.substitute(images).inverse());
}

TEST_CASE("length-lexicographic comparison") {
    Word a = Word::generator(0), b = Word::generator(1);
    REQUIRE(shorter_then_lex(a, a * b));
    REQUIRE(shorter_then_lex(a, b));
    REQUIRE_FALSE(shorter_then_lex(b, a));
}
