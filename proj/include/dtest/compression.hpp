#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace dtest {

enum class CompressorId { bzip2, gzip, zstd };

std::string_view to_string(CompressorId id) noexcept;
std::optional<CompressorId> parse_compressor(std::string_view name) noexcept;

/// Length in bytes of `data` after compression at the compressor's strongest
/// standard setting (bzip2: 900k blocks, gzip: level 9, zstd: level 19).
/// Throws CompressorFailure.
std::size_t compressed_size(std::string_view data, CompressorId id);

}  // namespace dtest
