#include <doctest.h>

#include <cstdint>
#include <filesystem>
#include <random>

#include "cste/csvio.hpp"

using namespace cste;

TEST_SUITE("csvio") {

TEST_CASE("format_double round-trips exactly") {
    std::mt19937_64 rng(123);
    std::uniform_real_distribution<double> dist(-1e6, 1e6);
    for (int i = 0; i < 1000; ++i) {
        const double x = dist(rng);
        CHECK(parse_double(format_double(x), "t") == x);
    }
    CHECK(format_double(0.0) == "0");
    CHECK(format_double(1.0) == "1");
    CHECK(format_double(0.1) == "0.1");
}

TEST_CASE("split_csv_line") {
    const auto fields = split_csv_line("a,b,,d");
    REQUIRE(fields.size() == 4);
    CHECK(fields[0] == "a");
    CHECK(fields[2] == "");
    CHECK(fields[3] == "d");
    CHECK(split_csv_line("").size() == 1);
}

TEST_CASE("split_lines matches file reading") {
    const std::string text = "one\ntwo\nthree\n";
    const auto from_text = split_lines(text);
    REQUIRE(from_text.size() == 3);
    CHECK(from_text[1] == "two");

    const auto path = std::filesystem::temp_directory_path() / "cste_csvio_test.txt";
    write_text_file(path, text);
    CHECK(read_lines(path) == from_text);
    std::filesystem::remove(path);

    // no trailing newline
    CHECK(split_lines("a\nb").size() == 2);
    CHECK(split_lines("").empty());
}

TEST_CASE("parse errors carry context") {
    CHECK_THROWS_WITH_AS(parse_int("12x", "row 3"), doctest::Contains("row 3"),
                         std::runtime_error);
    CHECK_THROWS(parse_double("", "f"));
}

}
