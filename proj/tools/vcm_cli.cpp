#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "vcm/alignment.hpp"
#include "vcm/concept.hpp"
#include "vcm/error.hpp"
#include "vcm/flops.hpp"
#include "vcm/io.hpp"
#include "vcm/length_policy.hpp"
#include "vcm/random.hpp"
#include "vcm/table5.hpp"
#include "vcm/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace vcm;

namespace {

constexpr int kExitCheckFailed = 1;
constexpr int kExitInvalid = 2;

class CheckFailed : public Error {
 public:
  CheckFailed(std::string_view kind, const std::string& message) : Error(kind, message) {}
};

struct Options {
  std::string input;
  std::string output;
  std::string config;
  std::string emissions;
  std::string mode = "log";
  std::optional<std::size_t> tokens;
  std::optional<std::size_t> concepts;
  std::optional<std::uint64_t> seed;
  std::optional<int> precision;
  std::optional<double> scale;
  std::optional<double> ratio;
  std::optional<double> info_scale;
  std::optional<double> n_key;
  long n_instruction = 0;
  long n_response = 0;
  std::size_t trials = 0;
  double layers = 32;
  double hidden = 4096;
  double ffn = 11008;
  std::optional<double> n_mean;
  double n_var = 0;
  double learning_rate = 0.1;
  std::size_t steps = 2000;
};

// Artifacts are collected first and written only after every computation and
// check has run, each through a temporary file and rename.
struct Run {
  std::string stdout_text;
  std::vector<std::pair<fs::path, std::string>> files;
  std::optional<CheckFailed> failure;
};

std::uint64_t resolve_seed(const Options& opt, std::uint64_t fallback) {
  if (opt.seed) return *opt.seed;
  if (const char* env = std::getenv("VCM_SEED")) {
    std::uint64_t value = 0;
    const std::string_view text(env);
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size())
      throw InvalidArgument("VCM_SEED is not an unsigned integer: '" + std::string(text) + "'");
    return value;
  }
  return fallback;
}

SpaceMode space_mode(const Options& opt) {
  return opt.mode == "linear" ? SpaceMode::Linear : SpaceMode::Log;
}

std::size_t require_concepts(const Options& opt) {
  if (!opt.concepts) throw InvalidArgument("--l is required");
  return *opt.concepts;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    std::size_t used = 0;
    double value = 0.0;
    try {
      value = std::stod(cell, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || cell.find_first_not_of(" \t", used) != std::string::npos)
      throw ParseError("not a number: '" + cell + "'");
    out.push_back(value);
  }
  return out;
}

EmissionSequence random_emissions(Rng& rng, std::size_t tokens) {
  std::vector<double> keep(tokens);
  for (double& k : keep) k = rng.uniform(0.01, 0.99);
  return EmissionSequence::from_keep_probs(keep);
}

LogitSequence random_logits(Rng& rng, std::size_t tokens, double scale) {
  std::vector<Emission> logits(tokens);
  for (Emission& u : logits) u = {scale * rng.normal(), scale * rng.normal()};
  return LogitSequence(std::move(logits));
}

// --input file, then --emissions list of keep probabilities, then a seeded
// random sequence of --m tokens.
io::Sequence load_sequence(const Options& opt) {
  if (!opt.input.empty()) return io::parse_sequence(io::read_file(opt.input));
  if (!opt.emissions.empty()) {
    const std::vector<double> keep = parse_list(opt.emissions);
    return EmissionSequence::from_keep_probs(keep);
  }
  if (!opt.tokens) throw InvalidArgument("give --input, --emissions or --m");
  Rng rng(resolve_seed(opt, 0));
  return random_logits(rng, *opt.tokens, opt.scale.value_or(1.0));
}

io::AppConfig load_config(const Options& opt) {
  return opt.config.empty() ? io::parse_config("{}")
                            : io::parse_config(io::read_file(opt.config));
}

double relative_error(double a, double b, double floor) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

json routes_json(const TotalRoutes& routes) {
  return {{"alpha_terminal", routes.alpha_terminal},
          {"beta_initial", routes.beta_initial},
          {"slices", routes.slices}};
}

Run cmd_align(const Options& opt) {
  const EmissionSequence em = io::to_emissions(load_sequence(opt));
  const std::size_t concepts = require_concepts(opt);
  const AlignmentLattice lattice = compute_lattice(em, concepts, space_mode(opt));
  const double p = sequence_probability(lattice);

  Run run;
  const json summary = {{"tokens", em.size()},
                        {"concepts", concepts},
                        {"mode", opt.mode},
                        {"probability", p},
                        {"log_probability", lattice.log_total},
                        {"loss", -lattice.log_total},
                        {"routes", routes_json(lattice.routes)}};
  run.stdout_text = summary.dump(2) + "\n";
  if (!opt.output.empty()) {
    const fs::path dir(opt.output);
    run.files.emplace_back(dir / "alpha.csv", io::matrix_to_csv(lattice.alpha, opt.precision, true));
    run.files.emplace_back(dir / "beta.csv", io::matrix_to_csv(lattice.beta, opt.precision, true));
    run.files.emplace_back(dir / "gamma.csv", io::matrix_to_csv(lattice.gamma, opt.precision, true));
    run.files.emplace_back(dir / "summary.json", run.stdout_text);
  }
  return run;
}

Run cmd_oracle(const Options& opt) {
  constexpr double kTolerance = 1e-9;
  double worst = 0.0;
  std::size_t cases = 0;
  auto check = [&](const EmissionSequence& em, std::size_t concepts) {
    const double dp = std::exp(log_sequence_probability(compute_lattice(em, concepts, space_mode(opt))));
    const double bf = brute_force_probability(em, concepts);
    worst = std::max(worst, relative_error(dp, bf, 1e-300));
    ++cases;
  };

  if (!opt.input.empty() || !opt.emissions.empty()) {
    check(io::to_emissions(load_sequence(opt)), require_concepts(opt));
  } else {
    const std::size_t max_tokens = opt.tokens.value_or(10);
    if (max_tokens > kOracleMaxTokens)
      throw OracleTooLarge("--m " + std::to_string(max_tokens) + " exceeds the enumeration limit " +
                           std::to_string(kOracleMaxTokens));
    const std::size_t trials = opt.trials ? opt.trials : 100;
    Rng rng(resolve_seed(opt, 0));
    for (std::size_t m = 1; m <= max_tokens; ++m)
      for (std::size_t l = 0; is_feasible(m, l); ++l)
        for (std::size_t i = 0; i < trials; ++i) check(random_emissions(rng, m), l);
  }

  Run run;
  const bool pass = worst <= kTolerance;
  run.stdout_text = json{{"cases", cases},
                         {"max_relative_error", worst},
                         {"tolerance", kTolerance},
                         {"pass", pass}}
                        .dump(2) +
                    "\n";
  if (!pass)
    run.failure.emplace("CheckFailed", "DP and enumeration disagree: max relative error " +
                                           io::format_double(worst));
  return run;
}

Matrix finite_difference(const LogitSequence& logits, std::size_t concepts, double h) {
  Matrix grad(logits.size(), 2);
  for (std::size_t t = 0; t < logits.size(); ++t) {
    for (std::size_t c = 0; c < 2; ++c) {
      auto loss_at = [&](double delta) {
        LogitSequence copy = logits;
        (c == 0 ? copy[t].blank : copy[t].keep) += delta;
        return vcm_loss(copy.softmax(), concepts);
      };
      grad(t, c) = (loss_at(h) - loss_at(-h)) / (2.0 * h);
    }
  }
  return grad;
}

LogitSequence as_logits(const io::Sequence& seq) {
  if (const auto* logits = std::get_if<LogitSequence>(&seq)) return *logits;
  const EmissionSequence& em = std::get<EmissionSequence>(seq);
  std::vector<Emission> out(em.size());
  for (std::size_t t = 0; t < em.size(); ++t)
    out[t] = {em.log_prob(t, Symbol::Blank), em.log_prob(t, Symbol::Keep)};
  return LogitSequence(std::move(out));
}

Run cmd_gradcheck(const Options& opt) {
  constexpr double kStep = 1e-5;
  constexpr double kTolerance = 1e-4;
  double worst = 0.0;
  std::size_t cases = 0;
  auto check = [&](const LogitSequence& logits, std::size_t concepts) {
    const Matrix analytic = vcm_gradient(logits, concepts, space_mode(opt));
    const Matrix numeric = finite_difference(logits, concepts, kStep);
    for (std::size_t i = 0; i < analytic.data().size(); ++i)
      worst = std::max(worst, relative_error(analytic.data()[i], numeric.data()[i], 1e-8));
    ++cases;
  };

  if (!opt.input.empty() || !opt.emissions.empty()) {
    check(as_logits(load_sequence(opt)), require_concepts(opt));
  } else {
    const std::size_t max_tokens = opt.tokens.value_or(10);
    if (max_tokens == 0) throw InvalidArgument("--m must be positive");
    const std::size_t trials = opt.trials ? opt.trials : 50;
    Rng rng(resolve_seed(opt, 0));
    for (std::size_t i = 0; i < trials; ++i) {
      const std::size_t m = 1 + rng.below(max_tokens);
      const std::size_t l = opt.concepts ? *opt.concepts : rng.below((m + 1) / 2 + 1);
      require_feasible(m, l);
      check(random_logits(rng, m, opt.scale.value_or(1.0)), l);
    }
  }

  Run run;
  const bool pass = worst <= kTolerance;
  run.stdout_text = json{{"cases", cases},
                         {"step", kStep},
                         {"max_relative_error", worst},
                         {"tolerance", kTolerance},
                         {"pass", pass}}
                        .dump(2) +
                    "\n";
  if (!pass)
    run.failure.emplace("CheckFailed", "analytic gradient disagrees with finite differences: " +
                                           io::format_double(worst));
  return run;
}

std::string mask_string(const std::vector<std::uint8_t>& mask) {
  std::string out;
  for (auto bit : mask) out += bit ? '1' : '0';
  return out;
}

Run cmd_decode(const Options& opt) {
  const EmissionSequence em = io::to_emissions(load_sequence(opt));
  const std::size_t concepts = require_concepts(opt);
  const BestPath path = best_path_decode(em, concepts);
  std::vector<std::uint8_t> path_mask;
  std::vector<std::size_t> states;
  for (std::size_t t = 0; t < path.symbols.size(); ++t) {
    path_mask.push_back(path.symbols[t] == Symbol::Keep);
    states.push_back(path.states[t] + 1);
  }
  const SelectionMask greedy = greedy_select(em);

  Run run;
  run.stdout_text = json{{"concepts", concepts},
                         {"states", states},
                         {"path", mask_string(path_mask)},
                         {"path_runs", count_keep_runs(path.symbols)},
                         {"log_prob", path.log_prob},
                         {"greedy", mask_string(greedy.mask)},
                         {"greedy_runs", count_mask_runs(greedy.mask)}}
                        .dump(2) +
                    "\n";
  return run;
}

Run cmd_merge(const Options& opt) {
  if (opt.input.empty()) throw InvalidArgument("--input features CSV is required");
  const Matrix features = io::parse_csv_matrix(io::read_file(opt.input));
  Options seq_opt = opt;
  seq_opt.input.clear();
  if (seq_opt.emissions.empty()) throw InvalidArgument("--emissions is required");
  // --emissions names a sequence file when it exists, else a keep-probability list.
  const EmissionSequence em =
      fs::exists(opt.emissions)
          ? io::to_emissions(io::parse_sequence(io::read_file(opt.emissions)))
          : io::to_emissions(load_sequence(seq_opt));
  const ConceptSegments segments = merge_segments(features, greedy_select(em));

  Run run;
  const std::string text = io::segments_to_json(segments) + "\n";
  if (opt.output.empty())
    run.stdout_text = text;
  else
    run.files.emplace_back(opt.output, text);
  return run;
}

Run cmd_length(const Options& opt) {
  io::AppConfig cfg = load_config(opt);
  if (opt.info_scale) cfg.length.info_scale = *opt.info_scale;
  cfg.length.validate();
  if (!opt.tokens) throw InvalidArgument("--m is required");
  const double r = opt.ratio.value_or(0.0);
  const double n_key =
      opt.n_key ? std::clamp(*opt.n_key, static_cast<double>(cfg.length.n_key_min),
                             static_cast<double>(cfg.length.n_key_max))
                : static_cast<double>(effective_keyword_diff(
                      {opt.n_instruction, opt.n_response, r}, cfg.length));

  Run run;
  run.stdout_text = json{{"tokens", *opt.tokens},
                         {"S", cfg.length.info_scale},
                         {"n_key", n_key},
                         {"raw_length", raw_length(*opt.tokens, n_key, cfg.length)},
                         {"length", estimate_length(*opt.tokens, n_key, cfg.length)},
                         {"epsilon", epsilon(r, cfg.coefficient)}}
                        .dump(2) +
                    "\n";
  return run;
}

Run cmd_epsilon(const Options& opt) {
  if (!opt.ratio) throw InvalidArgument("--r is required");
  const io::AppConfig cfg = load_config(opt);
  Run run;
  run.stdout_text = io::format_number(epsilon(*opt.ratio, cfg.coefficient), opt.precision) + "\n";
  return run;
}

Run cmd_flops(const Options& opt) {
  FlopsProfile base;
  base.layers = opt.layers;
  base.hidden = opt.hidden;
  base.ffn = opt.ffn;
  base.n_mean = opt.n_mean.value_or(opt.hidden / 4.0);
  base.n_var = opt.n_var;
  base.validate();

  std::vector<double> scales{1.0, 0.5, 0.25, 0.125};
  if (opt.scale && std::find(scales.begin(), scales.end(), *opt.scale) == scales.end())
    scales.push_back(*opt.scale);

  const int digits = opt.precision.value_or(6);
  std::string out = "scale,n_mean,exact_flops,expected_flops,ratio,reduction\n";
  for (double s : scales) {
    FlopsProfile p = base;
    p.scale = s;
    const double ratio = reduction_ratio(p);
    out += io::format_double(s) + "," + io::format_double(s * base.n_mean) + "," +
           io::format_double(flops_exact(p, s * base.n_mean)) + "," +
           io::format_double(flops_expected(p)) + "," + io::format_number(ratio, digits) + "," +
           io::format_number(1.0 - ratio, digits) + "\n";
  }
  Run run;
  if (opt.output.empty())
    run.stdout_text = out;
  else
    run.files.emplace_back(opt.output, out);
  return run;
}

Run cmd_train(const Options& opt) {
  TrainConfig cfg;
  if (opt.tokens) cfg.tokens = *opt.tokens;
  if (opt.concepts) cfg.concepts = *opt.concepts;
  cfg.learning_rate = opt.learning_rate;
  cfg.max_steps = opt.steps;
  cfg.seed = resolve_seed(opt, cfg.seed);
  const TrainTrace trace = train_logits(cfg);

  Run run;
  run.stdout_text = json{{"tokens", cfg.tokens},
                         {"concepts", cfg.concepts},
                         {"seed", cfg.seed},
                         {"steps", trace.losses.size()},
                         {"initial_loss", trace.initial_loss()},
                         {"final_loss", trace.final_loss()},
                         {"best_path_runs", trace.best_path_runs},
                         {"greedy_runs", trace.final_runs},
                         {"greedy_mask", mask_string(trace.final_mask)},
                         {"plateaued", trace.plateaued},
                         {"converged", trace.converged}}
                        .dump(2) +
                    "\n";
  if (!opt.output.empty()) run.files.emplace_back(opt.output, io::trace_to_csv(trace));
  if (!trace.converged)
    run.failure.emplace("NonConvergence", "training did not reach " +
                                              std::to_string(cfg.concepts) + " runs with a lower loss");
  return run;
}

Run cmd_table5(const Options& opt) {
  const table5::Comparison cmp = table5::compare();
  const int digits = opt.precision.value_or(6);
  std::string out = "t,state,computed,published,delta,match\n";
  for (std::size_t t = 0; t < table5::kTokens; ++t) {
    for (std::size_t l = 0; l < table5::kStates; ++l) {
      const double published = table5::kPublishedAlpha[t][l];
      const bool match = std::round(cmp.alpha(t, l) * 1000.0) == std::round(published * 1000.0);
      out += std::to_string(t + 1) + "," + std::to_string(l + 1) + "," +
             io::format_number(cmp.alpha(t, l), digits) + "," + io::format_number(published, 3) +
             "," + io::format_number(cmp.delta(t, l), digits) + "," + (match ? "yes" : "no") + "\n";
    }
  }
  const bool total_ok = std::abs(cmp.total - table5::kPublishedTotal) <= 1e-3;
  out += "# fixture_version " + std::to_string(table5::kFixtureVersion) + "\n";
  out += "# mismatches " + std::to_string(cmp.mismatches) + " of " +
         std::to_string(table5::kTokens * table5::kStates) + "\n";
  out += "# max_abs_delta " + io::format_number(cmp.max_abs_delta, digits) + "\n";
  out += "# total " + io::format_number(cmp.total, digits) + " published " +
         io::format_number(table5::kPublishedTotal, 3) + "\n";

  Run run;
  if (opt.output.empty())
    run.stdout_text = out;
  else
    run.files.emplace_back(opt.output, out);
  if (cmp.mismatches != 0 || !total_ok)
    run.failure.emplace("CheckFailed", std::to_string(cmp.mismatches) +
                                           " forward cells differ from the published table");
  return run;
}

void emit_error(std::string_view kind, const std::string& message) {
  std::cerr << json{{"error", {{"kind", std::string(kind)}, {"message", message}}}}.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Concept-alignment lattice toolkit"};
  app.require_subcommand(1);
  Options opt;
  std::function<Run(const Options&)> handler;

  auto add_sequence = [&](CLI::App* sub) {
    sub->add_option("--input", opt.input, "Sequence JSON with \"probs\" or \"logits\"");
    sub->add_option("--emissions", opt.emissions, "Comma-separated keep probabilities");
    sub->add_option("--m", opt.tokens, "Tokens in a seeded random sequence");
    sub->add_option("--scale", opt.scale, "Stddev of random logits");
  };
  auto add_seed = [&](CLI::App* sub) {
    sub->add_option("--seed", opt.seed, "RNG seed (falls back to $VCM_SEED)");
  };
  auto add_mode = [&](CLI::App* sub) {
    sub->add_option("--mode", opt.mode, "Arithmetic space")
        ->check(CLI::IsMember({"linear", "log"}));
  };

  CLI::App* align = app.add_subcommand("align", "Forward/backward tables, posterior and loss");
  add_sequence(align);
  add_seed(align);
  add_mode(align);
  align->add_option("--l", opt.concepts, "Concept count L")->required();
  align->add_option("--precision", opt.precision, "Decimals in CSV output");
  align->add_option("--output", opt.output, "Directory for alpha/beta/gamma CSVs");
  align->callback([&] { handler = cmd_align; });

  CLI::App* oracle = app.add_subcommand("oracle", "Dynamic program vs exhaustive enumeration");
  add_sequence(oracle);
  add_seed(oracle);
  add_mode(oracle);
  oracle->add_option("--l", opt.concepts, "Concept count for a single --input");
  oracle->add_option("--trials", opt.trials, "Random sequences per (M, L)");
  oracle->callback([&] { handler = cmd_oracle; });

  CLI::App* grad = app.add_subcommand("gradcheck", "Analytic gradient vs finite differences");
  add_sequence(grad);
  add_seed(grad);
  add_mode(grad);
  grad->add_option("--l", opt.concepts, "Concept count (random per trial when omitted)");
  grad->add_option("--trials", opt.trials, "Random instances");
  grad->callback([&] { handler = cmd_gradcheck; });

  CLI::App* decode = app.add_subcommand("decode", "Most probable lattice path and greedy mask");
  add_sequence(decode);
  add_seed(decode);
  decode->add_option("--l", opt.concepts, "Concept count L")->required();
  decode->callback([&] { handler = cmd_decode; });

  CLI::App* merge = app.add_subcommand("merge", "Score-weighted segment merge of a features CSV");
  merge->add_option("--input", opt.input, "Features CSV (M rows x d columns)")->required();
  merge->add_option("--emissions", opt.emissions,
                    "Sequence JSON file or comma-separated keep probabilities")
      ->required();
  merge->add_option("--output", opt.output, "Segments JSON path");
  merge->callback([&] { handler = cmd_merge; });

  CLI::App* length = app.add_subcommand("length", "Target concept length from keyword counts");
  length->add_option("--m", opt.tokens, "Vision token count M")->required();
  length->add_option("--n-instruction", opt.n_instruction, "Instruction keywords");
  length->add_option("--n-response", opt.n_response, "Response keywords");
  length->add_option("--n-key", opt.n_key, "Keyword difference, overriding the counts");
  length->add_option("--r", opt.ratio, "Mask ratio");
  length->add_option("--s", opt.info_scale, "Information scale S");
  length->add_option("--config", opt.config, "Config JSON");
  length->callback([&] { handler = cmd_length; });

  CLI::App* eps = app.add_subcommand("epsilon", "Loss coefficient for a mask ratio");
  eps->add_option("--r", opt.ratio, "Mask ratio")->required();
  eps->add_option("--config", opt.config, "Config JSON (a, b, k)");
  eps->add_option("--precision", opt.precision, "Fixed decimals");
  eps->callback([&] { handler = cmd_epsilon; });

  CLI::App* flops = app.add_subcommand("flops", "Decoder FLOPs and reduction ratios");
  flops->add_option("--layers", opt.layers, "Layer count T");
  flops->add_option("--hidden", opt.hidden, "Hidden width d");
  flops->add_option("--ffn", opt.ffn, "FFN width m");
  flops->add_option("--nmean", opt.n_mean, "Mean sequence length (default d/4)");
  flops->add_option("--nvar", opt.n_var, "Sequence length variance");
  flops->add_option("--scale", opt.scale, "Extra scale row");
  flops->add_option("--precision", opt.precision, "Decimals for ratios");
  flops->add_option("--output", opt.output, "CSV path");
  flops->callback([&] { handler = cmd_flops; });

  CLI::App* train = app.add_subcommand("train", "Gradient descent on a synthetic logit sequence");
  train->add_option("--m", opt.tokens, "Tokens M");
  train->add_option("--l", opt.concepts, "Concepts L");
  train->add_option("--lr", opt.learning_rate, "Learning rate");
  train->add_option("--steps", opt.steps, "Maximum steps");
  add_seed(train);
  train->add_option("--output", opt.output, "Loss trace CSV path");
  train->callback([&] { handler = cmd_train; });

  CLI::App* t5 = app.add_subcommand("table5", "Reproduce the embedded 8-token worked example");
  t5->add_option("--precision", opt.precision, "Decimals for computed values");
  t5->add_option("--output", opt.output, "Report path");
  t5->callback([&] { handler = cmd_table5; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    emit_error("UsageError", e.what());
    return kExitInvalid;
  }

  try {
    Run run = handler(opt);
    for (const auto& [path, contents] : run.files) {
      if (path.has_parent_path()) fs::create_directories(path.parent_path());
      io::write_file_atomic(path, contents);
    }
    std::cout << run.stdout_text;
    if (run.failure) {
      emit_error(run.failure->kind(), run.failure->what());
      return kExitCheckFailed;
    }
    return 0;
  } catch (const Error& e) {
    emit_error(e.kind(), e.what());
    return kExitInvalid;
  } catch (const std::exception& e) {
    emit_error("IOError", e.what());
    return kExitInvalid;
  }
}
