#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "dtest/activation.hpp"
#include "dtest/faults.hpp"
#include "dtest/feature_matrix.hpp"

namespace dtest::io {

namespace fs = std::filesystem;

/// Whole file as bytes; FileNotFound when it cannot be opened.
std::string read_file(const fs::path& path);
/// Writes through a temporary sibling and renames it into place.
void write_file(const fs::path& path, std::string_view bytes);

// Feature matrices. FMAT1 layout: "FMAT1", u32 n, u32 m, n NUL-terminated
// ids, n*m f64 row-major; all little-endian. CSV: header id,f0,...,f{m-1}.
FeatureMatrix parse_fmat1(std::string_view bytes);
std::string encode_fmat1(const FeatureMatrix& matrix);
FeatureMatrix parse_feature_csv(std::string_view text);
std::string encode_feature_csv(const FeatureMatrix& matrix);
/// FMAT1 when the file starts with the magic, CSV otherwise.
FeatureMatrix load_features(const fs::path& path);
/// Format picked from the extension: .csv is CSV, anything else FMAT1.
void save_features(const fs::path& path, const FeatureMatrix& matrix);

// Activation traces. ATRC1 layout: "ATRC1", u32 inputs, u32 layers, per
// layer (u32 name length, name bytes, u32 width), NUL-terminated ids, then
// f32 activations input-major, layers in order.
ActivationTrace parse_atrc1(std::string_view bytes);
std::string encode_atrc1(const ActivationTrace& trace);
ActivationTrace load_trace(const fs::path& path);
void save_trace(const fs::path& path, const ActivationTrace& trace);

/// Profile JSON: {"neurons": [{layer, index, low, high}], "layer_training_refs":
/// {layer: file}, "class_labels": [...]}. Referenced training activation
/// files (feature-matrix formats) are resolved relative to the profile.
ActivationProfile load_profile(const fs::path& path);
/// Writes the JSON and, for every layer with training activations, the
/// matrix itself next to it (`<stem>.<layer>.fmat` unless a ref is set).
void save_profile(const fs::path& path, const ActivationProfile& profile);

/// CSV id,actual_class,predicted_class.
OutcomeTable parse_outcomes_csv(std::string_view text);
std::string encode_outcomes_csv(const OutcomeTable& table);

/// CSV id,cluster with -1 for noise.
FaultClustering parse_clusters_csv(std::string_view text);
std::string encode_clusters_csv(const FaultClustering& clustering);

/// CSV id,x0,...,x{d-1}.
Embedding parse_embedding_csv(std::string_view text);
std::string encode_embedding_csv(const Embedding& embedding);

/// CSV id,class (class labels for the class-diversity experiment).
std::map<std::string, int> parse_labels_csv(std::string_view text);

/// One id per line; blank lines ignored.
std::vector<std::string> parse_id_list(std::string_view text);

/// One number per line, or the last column of a CSV; a non-numeric first
/// line is taken as a header.
std::vector<double> parse_value_column(std::string_view text);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double value);

enum class FileKind { fmat1, feature_csv, atrc1, profile, outcomes, clusters, embedding };

/// Guesses the kind from magic bytes, JSON, or the CSV header.
FileKind detect_kind(const fs::path& path);
std::string_view to_string(FileKind kind) noexcept;

}  // namespace dtest::io
