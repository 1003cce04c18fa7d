#include <doctest.h>

#include <filesystem>
#include <string>

#include "oracles.hpp"
#include "vcm/error.hpp"
#include "vcm/io.hpp"
#include "vcm/random.hpp"

using namespace vcm;

TEST_CASE("format_double round-trips") {
  Rng rng(17);
  for (int i = 0; i < 1000; ++i) {
    const double x = rng.normal() * std::pow(10.0, static_cast<int>(rng.below(20)) - 10);
    CHECK(std::stod(io::format_double(x)) == x);
  }
  CHECK(io::format_number(0.123456, 3) == "0.123");
  CHECK(io::format_number(0.7, std::nullopt) == "0.7");
}

TEST_CASE("matrix CSV round-trip") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    Matrix m(1 + rng.below(10), 1 + rng.below(6));
    for (double& x : m.data()) x = rng.normal();
    CHECK(io::parse_csv_matrix(io::matrix_to_csv(m)) == m);
  }
  const Matrix m = Matrix::from_rows({{1.5, 2.0}, {3.0, 4.25}});
  CHECK(io::matrix_to_csv(m, 2, true) == "t,1,2\n1,1.50,2.00\n2,3.00,4.25\n");
  CHECK(io::parse_csv_matrix("a,b\n1,2\n\n3,4\n") == Matrix::from_rows({{1, 2}, {3, 4}}));
  CHECK(io::parse_csv_matrix("x,y\n1.5,2\r\n3,4.25\n") == m);
}

TEST_CASE("matrix CSV errors") {
  CHECK_THROWS_AS(io::parse_csv_matrix(""), ParseError);
  CHECK_THROWS_AS(io::parse_csv_matrix("a,b\n"), ParseError);
  CHECK_THROWS_AS(io::parse_csv_matrix("1,2\nx,3\n"), ParseError);
  CHECK_THROWS_AS(io::parse_csv_matrix("1,2\n3\n"), DimensionMismatch);
}

TEST_CASE("sequence JSON round-trip") {
  Rng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    const EmissionSequence em = testing::random_emissions(rng, 1 + rng.below(30));
    const io::Sequence parsed = io::parse_sequence(io::emissions_to_json(em));
    REQUIRE(std::holds_alternative<EmissionSequence>(parsed));
    const EmissionSequence back = io::to_emissions(parsed);
    REQUIRE(back.size() == em.size());
    for (std::size_t t = 0; t < em.size(); ++t) CHECK(back[t] == em[t]);

    const LogitSequence logits = testing::random_logits(rng, 1 + rng.below(30), 3.0);
    const io::Sequence lp = io::parse_sequence(io::logits_to_json(logits));
    REQUIRE(std::holds_alternative<LogitSequence>(lp));
    const LogitSequence& lb = std::get<LogitSequence>(lp);
    for (std::size_t t = 0; t < logits.size(); ++t) CHECK(lb[t] == logits[t]);
  }
}

TEST_CASE("sequence JSON errors") {
  CHECK_THROWS_AS(io::parse_sequence("{"), ParseError);
  CHECK_THROWS_AS(io::parse_sequence("[]"), ParseError);
  CHECK_THROWS_AS(io::parse_sequence("{}"), ParseError);
  CHECK_THROWS_AS(io::parse_sequence(R"({"probs":[[0.5,0.5]],"logits":[[0,0]]})"), ParseError);
  CHECK_THROWS_AS(io::parse_sequence(R"({"probs":[[0.5]]})"), ParseError);
  CHECK_THROWS_AS(io::parse_sequence(R"({"probs":[["a",0.5]]})"), ParseError);
  CHECK_THROWS_AS(io::parse_sequence(R"({"probs":[[0.7,0.7]]})"), InvalidArgument);
  CHECK_THROWS_AS(io::parse_sequence(R"({"probs":[]})"), InvalidArgument);
}

TEST_CASE("segments JSON round-trip") {
  ConceptSegments seg;
  seg.concepts = Matrix::from_rows({{3.5, -1.0}, {8.0, 0.125}});
  seg.spans = {{1, 2}, {4, 4}};
  seg.masses = {1.0, 0.3};
  const ConceptSegments back = io::parse_segments(io::segments_to_json(seg));
  CHECK(back.concepts == seg.concepts);
  CHECK(back.spans == seg.spans);
  CHECK(back.masses == seg.masses);
  CHECK_THROWS_AS(io::parse_segments(R"({"concepts":[[1]],"spans":[],"masses":[1]})"),
                  ParseError);
  CHECK_THROWS_AS(io::parse_segments(R"({"concepts":[[1]]})"), ParseError);
}

TEST_CASE("config parsing") {
  const io::AppConfig defaults = io::parse_config("{}");
  CHECK(defaults.length.info_scale == 0.25);
  CHECK(defaults.coefficient.k == 5.0);
  const io::AppConfig cfg =
      io::parse_config(R"({"S":0.5,"a":0.1,"b":0.9,"k":2,"seed":12,"d":64,"h":8,"V":16})");
  CHECK(cfg.length.info_scale == 0.5);
  CHECK(cfg.coefficient.a == 0.1);
  CHECK(cfg.coefficient.b == 0.9);
  CHECK(cfg.coefficient.k == 2.0);
  CHECK(cfg.seed == 12);
  CHECK(cfg.width == 64);
  CHECK(cfg.heads == 8);
  CHECK(cfg.vocab == 16);
  CHECK_THROWS_AS(io::parse_config(R"({"S":"wide"})"), ParseError);
  CHECK_THROWS_AS(io::parse_config(R"({"S":0.9})"), InvalidArgument);
  CHECK_THROWS_AS(io::parse_config(R"({"a":2,"b":1})"), InvalidArgument);
  CHECK_THROWS_AS(io::parse_config("[1]"), ParseError);
}

TEST_CASE("trace CSV") {
  TrainTrace trace;
  trace.losses = {2.5, 1.25};
  CHECK(io::trace_to_csv(trace) == "step,loss\n0,2.5\n1,1.25\n");
}

TEST_CASE("fingerprints and atomic writes") {
  CHECK(io::fingerprint("") == "cbf29ce484222325");
  CHECK(io::fingerprint(Matrix::from_rows({{1, 2}})) == io::fingerprint("1x2:1;2;"));

  const auto dir = std::filesystem::temp_directory_path() / "vcm_io_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "out.txt";
  io::write_file_atomic(path, "first");
  io::write_file_atomic(path, "second");
  CHECK(io::read_file(path) == "second");
  CHECK_FALSE(std::filesystem::exists(dir / "out.txt.tmp"));
  CHECK_THROWS_AS(io::read_file(dir / "missing.txt"), ParseError);
  std::filesystem::remove_all(dir);
}
