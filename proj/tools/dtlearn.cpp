// Command-line surface for coupled deep transform learning: synthetic data
// generation, training, encoding, cross-domain mapping, identification and
// CMC evaluation. Exit codes: 0 success, 1 usage error, 2 data error,
// 3 numerical failure.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>

#include "dtl/deep.hpp"
#include "dtl/io.hpp"
#include "dtl/linalg.hpp"
#include "dtl/matching.hpp"
#include "dtl/synthetic.hpp"

namespace fs = std::filesystem;
using dtl::CouplingKind;
using dtl::MatrixD;

namespace {

struct GenSynthArgs {
  dtl::SyntheticSpec spec;
  std::string out_dir;
  std::string format = "csv";
};

void write_manifest(const fs::path& path, const std::string& body) {
  dtl::atomic_write(path, body);
}

void run_gen_synth(const GenSynthArgs& args) {
  const auto data = dtl::gen_synthetic_coupled<double>(args.spec);
  const fs::path dir(args.out_dir);
  fs::create_directories(dir / "truth");

  const std::string ext = args.format == "binary" ? ".dmx" : ".csv";
  dtl::save_matrix(dir / ("x1" + ext), data.x1);
  dtl::save_matrix(dir / ("x2" + ext), data.x2);
  dtl::save_labels(dir / "labels.txt", data.labels);
  dtl::save_matrix_binary(dir / "truth" / "t1.dmx", data.true_t1);
  dtl::save_matrix_binary(dir / "truth" / "t2.dmx", data.true_t2);
  dtl::save_matrix_binary(dir / "truth" / "map12.dmx", data.true_map_12);
  dtl::save_matrix_binary(dir / "truth" / "map21.dmx", data.true_map_21);
  dtl::save_matrix_binary(dir / "truth" / "z1.dmx", data.true_z1);
  dtl::save_matrix_binary(dir / "truth" / "z2.dmx", data.true_z2);

  write_manifest(dir / "train.manifest",
                 "domain1 = x1" + ext + "\ndomain2 = x2" + ext +
                     "\nlabels = labels.txt\nsplit = train\n");
  write_manifest(dir / "gallery.manifest",
                 "domain2 = x2" + ext + "\nlabels = labels.txt\nsplit = gallery\n");
  write_manifest(dir / "probe.manifest",
                 "domain1 = x1" + ext + "\nlabels = labels.txt\nsplit = probe\n");

  std::cout << "generated " << data.x1.cols() << " paired samples of dimension "
            << data.x1.rows() << " for " << args.spec.subjects << " subjects in "
            << dir.string() << "\n";
}

struct TrainArgs {
  std::string data;
  std::string config;
  std::string model = "model.dtm";
  std::string trace = "trace.csv";
};

void run_train(const TrainArgs& args) {
  const dtl::TrainConfig config = args.config.empty()
                                      ? dtl::default_train_config()
                                      : dtl::load_train_config(args.config);
  const dtl::Dataset data = dtl::load_dataset(dtl::load_manifest(args.data));
  if (data.split != dtl::Split::Train)
    throw dtl::InvalidInput("train: manifest split must be 'train', got '" +
                            dtl::to_string(data.split) + "'");
  if (!data.x1 || !data.x2)
    throw dtl::InvalidInput("train: manifest must provide both domains");

  const auto result = dtl::fit_deep(*data.x1, *data.x2, config.kind,
                                    config.schedule(), config.ridge);
  dtl::save_model(args.model, result.model);
  dtl::write_trace_csv(args.trace, result.traces);

  const auto& coupled = result.traces.back().coupled;
  std::cout << "trained " << (config.kind == CouplingKind::Semi ? "semi" : "symmetric")
            << " model: depth " << result.model.depth() << ", dim "
            << result.model.dim() << ", " << coupled.size()
            << " final-layer sweeps, final cost "
            << (coupled.empty() ? 0.0 : coupled.back().total) << "\n"
            << "model written to " << args.model << ", trace to " << args.trace << "\n";
}

struct EncodeArgs {
  std::string model, input, output;
  int domain = 1;
  bool apply_budget = false;
};

void run_encode(const EncodeArgs& args) {
  const auto model = dtl::load_model(args.model);
  const MatrixD x = dtl::load_matrix(args.input);
  dtl::save_matrix(args.output, dtl::encode(model, x, args.domain, args.apply_budget));
  std::cout << "encoded " << x.cols() << " samples (domain " << args.domain
            << ") to " << args.output << "\n";
}

struct MapArgs {
  std::string model, input, output;
  std::string direction = "12";
};

void run_map(const MapArgs& args) {
  const auto model = dtl::load_model(args.model);
  const MatrixD z = dtl::load_matrix(args.input);
  const auto direction = args.direction == "12" ? dtl::MapDirection::OneToTwo
                                                : dtl::MapDirection::TwoToOne;
  dtl::save_matrix(args.output, dtl::map_codes(model, z, direction));
  std::cout << "mapped " << z.cols() << " codes (" << args.direction[0] << "->"
            << args.direction[1] << ") to " << args.output << "\n";
}

struct MatchArgs {
  std::string model, gallery, probe;
  std::string output = "rankings.csv";
  std::string metric = "euclidean";
  int gallery_domain = 2;
  int probe_domain = 1;
};

void run_match(const MatchArgs& args) {
  const auto model = dtl::load_model(args.model);

  const dtl::Dataset gallery_data = dtl::load_dataset(dtl::load_manifest(args.gallery));
  if (gallery_data.split != dtl::Split::Gallery)
    throw dtl::InvalidInput("match: gallery manifest split must be 'gallery'");
  const dtl::Dataset probe_data = dtl::load_dataset(dtl::load_manifest(args.probe));
  if (probe_data.split != dtl::Split::Probe)
    throw dtl::InvalidInput("match: probe manifest split must be 'probe'");

  const auto domain_features = [](const dtl::Dataset& data, int domain,
                                  const char* what) -> const MatrixD& {
    const auto& x = domain == 1 ? data.x1 : data.x2;
    if (!x)
      throw dtl::InvalidInput(std::string("match: ") + what +
                              " manifest lacks domain" + std::to_string(domain));
    return *x;
  };

  const MatrixD gallery_codes = dtl::encode(
      model, domain_features(gallery_data, args.gallery_domain, "gallery"),
      args.gallery_domain);
  MatrixD probe_codes = dtl::encode(
      model, domain_features(probe_data, args.probe_domain, "probe"),
      args.probe_domain);
  if (args.probe_domain != args.gallery_domain)
    probe_codes = dtl::map_codes(model, probe_codes,
                                 args.probe_domain == 1 ? dtl::MapDirection::OneToTwo
                                                        : dtl::MapDirection::TwoToOne);

  const dtl::Metric metric =
      args.metric == "cosine" ? dtl::Metric::Cosine : dtl::Metric::Euclidean;
  const auto gallery = dtl::enroll(gallery_codes, gallery_data.labels, metric);
  const auto results = dtl::identify(gallery, probe_codes, probe_data.labels);
  dtl::write_rankings_csv(args.output, results, probe_data.labels);

  std::cout << "matched " << results.size() << " probes against "
            << gallery.label_count() << " gallery identities ("
            << gallery.size() << " images); rankings written to "
            << args.output << "\n";
}

struct EvalCmcArgs {
  std::string rankings;
  std::string output = "cmc.csv";
  int max_rank = 0;  // 0 = full gallery depth
};

void run_eval_cmc(const EvalCmcArgs& args) {
  const dtl::RankingsFile file = dtl::load_rankings_csv(args.rankings);
  const int full = static_cast<int>(file.results.front().ranking.size());
  const int max_rank = args.max_rank > 0 ? args.max_rank : full;
  const dtl::CmcCurve curve = dtl::cmc_compute(file.results, max_rank);
  dtl::write_cmc_csv(args.output, curve);

  std::cout << "evaluated " << curve.n_probes << " probes, CMC written to "
            << args.output << "\n";
  for (int k : {1, 5, 10}) {
    if (k > max_rank) continue;
    std::cout << "rank-" << k << " accuracy: "
              << dtl::rank_k_accuracy(file.results, k) << "\n";
  }
}

struct InspectArgs {
  std::string model;
  bool defaults = false;
};

void run_inspect(const InspectArgs& args) {
  if (args.defaults) {
    std::cout << dtl::format_train_config(dtl::default_train_config());
    return;
  }
  if (args.model.empty())
    throw dtl::InvalidInput("inspect: provide --model or --defaults");
  const auto model = dtl::load_model(args.model);
  std::cout << "kind: "
            << (model.kind == CouplingKind::Semi ? "semi" : "symmetric") << "\n"
            << "depth: " << model.depth() << "\n"
            << "dim: " << model.dim() << "\n";
  for (dtl::Index j = 0; j < model.depth(); ++j) {
    for (int domain = 1; domain <= 2; ++domain) {
      const auto& layer = (domain == 1 ? model.layers1 : model.layers2)
          [static_cast<std::size_t>(j)];
      const auto lad = dtl::logabsdet(layer.t);
      std::cout << "layer " << (j + 1) << " domain " << domain
                << ": lambda " << layer.params.lambda
                << ", epsilon " << layer.params.epsilon
                << ", mu " << layer.params.mu << ", tau ";
      if (layer.budget.active())
        std::cout << *layer.budget.tau;
      else
        std::cout << "none";
      std::cout << ", det sign " << (lad.sign > 0 ? "+" : lad.sign < 0 ? "-" : "0")
                << ", log|det| " << lad.value << "\n";
    }
  }
  std::cout << "map 1->2: frobenius norm " << model.map_12.norm() << "\n";
  if (model.map_21)
    std::cout << "map 2->1: frobenius norm " << model.map_21->norm() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"coupled deep transform learning toolkit"};
  app.require_subcommand(1);

  GenSynthArgs gen;
  auto* gen_cmd = app.add_subcommand(
      "gen-synth", "generate a planted coupled-domain dataset");
  gen_cmd->add_option("--dim", gen.spec.dim, "feature dimension")->capture_default_str();
  gen_cmd->add_option("--subjects", gen.spec.subjects, "number of subjects")
      ->capture_default_str();
  gen_cmd->add_option("--samples", gen.spec.samples_per_subject,
                      "samples per subject")->capture_default_str();
  gen_cmd->add_option("--noise", gen.spec.noise,
                      "noise level relative to the signal norm")->capture_default_str();
  gen_cmd->add_option("--cond-bound", gen.spec.cond_bound,
                      "condition-number bound for planted matrices")
      ->capture_default_str();
  gen_cmd->add_option("--seed", gen.spec.seed, "random seed")->capture_default_str();
  gen_cmd->add_option("--out", gen.out_dir, "output directory")->required();
  gen_cmd->add_option("--format", gen.format, "matrix file format")
      ->check(CLI::IsMember({"csv", "binary"}))->capture_default_str();
  gen_cmd->callback([&] { run_gen_synth(gen); });

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "fit a deep coupled model");
  train_cmd->add_option("--data", train.data, "training manifest")->required();
  train_cmd->add_option("--config", train.config, "training configuration file");
  train_cmd->add_option("--model", train.model, "output model path")
      ->capture_default_str();
  train_cmd->add_option("--trace", train.trace, "output cost-trace CSV path")
      ->capture_default_str();
  train_cmd->callback([&] { run_train(train); });

  EncodeArgs enc;
  auto* enc_cmd = app.add_subcommand("encode", "encode features through a model");
  enc_cmd->add_option("--model", enc.model, "model path")->required();
  enc_cmd->add_option("--input", enc.input, "input feature matrix")->required();
  enc_cmd->add_option("--domain", enc.domain, "domain of the input (1 or 2)")
      ->check(CLI::IsMember({1, 2}))->capture_default_str();
  enc_cmd->add_option("--output", enc.output, "output codes path")->required();
  enc_cmd->add_flag("--apply-budget", enc.apply_budget,
                    "apply each layer's sparsity budget while encoding");
  enc_cmd->callback([&] { run_encode(enc); });

  MapArgs map;
  auto* map_cmd = app.add_subcommand("map", "map codes across domains");
  map_cmd->add_option("--model", map.model, "model path")->required();
  map_cmd->add_option("--input", map.input, "input codes matrix")->required();
  map_cmd->add_option("--direction", map.direction, "mapping direction (12 or 21)")
      ->check(CLI::IsMember({"12", "21"}))->capture_default_str();
  map_cmd->add_option("--output", map.output, "output codes path")->required();
  map_cmd->callback([&] { run_map(map); });

  MatchArgs match;
  auto* match_cmd =
      app.add_subcommand("match", "identify probes against a gallery");
  match_cmd->add_option("--model", match.model, "model path")->required();
  match_cmd->add_option("--gallery", match.gallery, "gallery manifest")->required();
  match_cmd->add_option("--probe", match.probe, "probe manifest")->required();
  match_cmd->add_option("--output", match.output, "output rankings CSV")
      ->capture_default_str();
  match_cmd->add_option("--metric", match.metric, "distance metric")
      ->check(CLI::IsMember({"euclidean", "cosine"}))->capture_default_str();
  match_cmd->add_option("--gallery-domain", match.gallery_domain,
                        "domain of the gallery features")
      ->check(CLI::IsMember({1, 2}))->capture_default_str();
  match_cmd->add_option("--probe-domain", match.probe_domain,
                        "domain of the probe features")
      ->check(CLI::IsMember({1, 2}))->capture_default_str();
  match_cmd->callback([&] { run_match(match); });

  EvalCmcArgs cmc;
  auto* cmc_cmd = app.add_subcommand("eval-cmc", "compute a CMC curve from rankings");
  cmc_cmd->add_option("--rankings", cmc.rankings, "rankings CSV from match")->required();
  cmc_cmd->add_option("--output", cmc.output, "output CMC CSV")->capture_default_str();
  cmc_cmd->add_option("--max-rank", cmc.max_rank,
                      "largest rank to report (default: gallery depth)");
  cmc_cmd->callback([&] { run_eval_cmc(cmc); });

  InspectArgs inspect;
  auto* inspect_cmd = app.add_subcommand("inspect", "describe a model or the defaults");
  inspect_cmd->add_option("--model", inspect.model, "model path");
  inspect_cmd->add_flag("--defaults", inspect.defaults,
                        "print the default training configuration");
  inspect_cmd->callback([&] { run_inspect(inspect); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const dtl::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const dtl::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
