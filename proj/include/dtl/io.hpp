#ifndef DTL_IO_HPP
#define DTL_IO_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dtl/deep.hpp"
#include "dtl/matching.hpp"
#include "dtl/types.hpp"

namespace dtl {

// Writes bytes to a temporary file in the target directory, then renames it
// over the destination, so readers never observe partial output.
void atomic_write(const std::filesystem::path& path, std::string_view bytes);

// ---------------------------------------------------------------------------
// Matrix files. Two formats:
//  - text CSV, one sample per row (transposed to the internal
//    column-per-sample convention on load), shortest round-trip decimals;
//  - binary: magic "DTLMATRX", version byte, then u64 rows, u64 cols and
//    row-major f64 data, all little-endian.
// load_matrix sniffs the magic; save_matrix picks the binary format for the
// .dmx extension and CSV otherwise. Round trips are bitwise identities.
// ---------------------------------------------------------------------------

MatrixD load_matrix(const std::filesystem::path& path);
void save_matrix(const std::filesystem::path& path, const MatrixD& m);

MatrixD load_matrix_csv(const std::filesystem::path& path);
void save_matrix_csv(const std::filesystem::path& path, const MatrixD& m);
MatrixD load_matrix_binary(const std::filesystem::path& path);
void save_matrix_binary(const std::filesystem::path& path, const MatrixD& m);

std::string serialize_matrix_binary(const MatrixD& m);
MatrixD parse_matrix_binary(std::string_view bytes);

// ---------------------------------------------------------------------------
// Label files: one non-empty label per line.
// ---------------------------------------------------------------------------

std::vector<std::string> load_labels(const std::filesystem::path& path);
void save_labels(const std::filesystem::path& path,
                 const std::vector<std::string>& labels);

// ---------------------------------------------------------------------------
// Model container: magic "DTLMODEL", version byte, kind byte (0 semi,
// 1 symmetric), u64 depth, then per layer and domain the parameter record
// (f64 lambda, f64 epsilon, f64 mu, u64 tau with 0 = dense) followed by the
// transform matrix block, then map_12 and, for symmetric models, map_21.
// Matrix blocks are u64 rows, u64 cols, row-major f64 data; everything is
// little-endian.
// ---------------------------------------------------------------------------

std::string serialize_model(const DeepTransform<double>& model);
DeepTransform<double> parse_model(std::string_view bytes);
void save_model(const std::filesystem::path& path,
                const DeepTransform<double>& model);
DeepTransform<double> load_model(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Dataset manifest: flat key = value text ('#' comments). Keys: domain1,
// domain2 (at least one required), labels (required), split (train |
// gallery | probe; required). Paths are resolved relative to the manifest's
// directory.
// ---------------------------------------------------------------------------

enum class Split { Train, Gallery, Probe };

std::string to_string(Split split);
Split split_from_string(const std::string& s);

struct DatasetManifest {
  std::optional<std::filesystem::path> domain1, domain2;
  std::filesystem::path labels;
  Split split = Split::Train;
};

DatasetManifest load_manifest(const std::filesystem::path& path);

struct Dataset {
  std::optional<MatrixD> x1, x2;
  std::vector<std::string> labels;
  Split split = Split::Train;
};

// Loads the referenced files and validates sample counts against the label
// file before returning anything to compute with.
Dataset load_dataset(const DatasetManifest& manifest);

// ---------------------------------------------------------------------------
// Training configuration: flat key = value text with optional [layer N]
// sections. Global keys: kind, depth, seed, ridge, plus per-layer defaults
// lambda, epsilon, mu, tau, iters, tol; a [layer N] section overrides the
// per-layer values for that layer. tau is a positive integer or "none".
// ---------------------------------------------------------------------------

struct TrainConfig {
  CouplingKind kind = CouplingKind::Semi;
  int depth = 2;
  std::uint64_t seed = 0;
  RidgeMode ridge = RidgeMode::Off;
  std::vector<LayerSettings> layers;  // resolved per layer, length == depth

  LayerSchedule schedule() const { return {layers}; }
};

TrainConfig default_train_config();
TrainConfig parse_train_config(const std::string& text);
TrainConfig load_train_config(const std::filesystem::path& path);
std::string format_train_config(const TrainConfig& config);

// ---------------------------------------------------------------------------
// Result CSVs (header row each):
//  - training trace: layer,stage,iteration,residual,frob_penalty,
//    logdet_penalty,coupling,total
//  - rankings: probe_index,probe_label,rank,gallery_label,distance
//  - CMC: rank,accuracy
// ---------------------------------------------------------------------------

void write_trace_csv(const std::filesystem::path& path,
                     const std::vector<LayerTraces>& traces);

void write_rankings_csv(const std::filesystem::path& path,
                        const std::vector<MatchResult>& results,
                        const std::vector<std::string>& probe_labels);

struct RankingsFile {
  std::vector<std::string> probe_labels;
  std::vector<MatchResult> results;
};

RankingsFile load_rankings_csv(const std::filesystem::path& path);

void write_cmc_csv(const std::filesystem::path& path, const CmcCurve& curve);

}  // namespace dtl

#endif  // DTL_IO_HPP
