#include <doctest.h>

#include "triagekit/text.hpp"

using namespace triagekit;

TEST_CASE("token_count splits on whitespace runs") {
    CHECK(token_count("") == 0);
    CHECK(token_count("   ") == 0);
    CHECK(token_count("one") == 1);
    CHECK(token_count("files encrypted by ransomware payload") == 5);
    CHECK(token_count("  spaced\t\tout \n tokens ") == 3);
}

TEST_CASE("normalize_word strips edge punctuation and lowercases") {
    CHECK(normalize_word("Ransomware,") == "ransomware");
    CHECK(normalize_word("(probe)") == "probe");
    CHECK(normalize_word("10.0.0.5") == "10.0.0.5");
    CHECK(normalize_word("***") == "");
}

TEST_CASE("glob matching is case-insensitive with * and ?") {
    CHECK(glob_match_ci("Trojan.*", "Trojan.Win32.Generic"));
    CHECK(glob_match_ci("trojan.*", "TROJAN.X"));
    CHECK(glob_match_ci("*worm*", "Net-Worm.Kido"));
    CHECK(glob_match_ci("sql?njection", "SQLInjection"));
    CHECK_FALSE(glob_match_ci("Trojan.*", "Trojan"));
    CHECK_FALSE(glob_match_ci("worm", "Net-Worm"));
    CHECK(glob_match_ci("*", ""));
    CHECK(glob_match_ci("", ""));
}

TEST_CASE("fnv1a64 is stable") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == fnv1a64("a"));
    CHECK(fnv1a64("a") != fnv1a64("b"));
}
