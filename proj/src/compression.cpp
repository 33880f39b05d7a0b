#include "dtest/compression.hpp"

#include <boost/iostreams/device/back_inserter.hpp>
#include <boost/iostreams/filter/bzip2.hpp>
#include <boost/iostreams/filter/gzip.hpp>
#include <boost/iostreams/filter/zstd.hpp>
#include <boost/iostreams/filtering_stream.hpp>
#include <vector>

#include "dtest/error.hpp"

namespace dtest {

namespace io = boost::iostreams;

std::string_view to_string(CompressorId id) noexcept {
  switch (id) {
    case CompressorId::bzip2: return "bzip2";
    case CompressorId::gzip: return "gzip";
    case CompressorId::zstd: return "zstd";
  }
  return "unknown";
}

std::optional<CompressorId> parse_compressor(std::string_view name) noexcept {
  if (name == "bzip2") return CompressorId::bzip2;
  if (name == "gzip") return CompressorId::gzip;
  if (name == "zstd") return CompressorId::zstd;
  return std::nullopt;
}

std::size_t compressed_size(std::string_view data, CompressorId id) {
  std::vector<char> out;
  try {
    io::filtering_ostream stream;
    switch (id) {
      case CompressorId::bzip2:
        stream.push(io::bzip2_compressor(io::bzip2_params(9)));
        break;
      case CompressorId::gzip:
        stream.push(io::gzip_compressor(io::gzip_params(io::gzip::best_compression)));
        break;
      case CompressorId::zstd:
        stream.push(io::zstd_compressor(io::zstd_params(19)));
        break;
    }
    stream.push(io::back_inserter(out));
    stream.write(data.data(), static_cast<std::streamsize>(data.size()));
    stream.reset();
  } catch (const std::exception& e) {
    throw Error(ErrorCode::CompressorFailure,
                std::string(to_string(id)) + " compression failed: " + e.what());
  }
  if (out.empty()) {
    throw Error(ErrorCode::CompressorFailure, std::string(to_string(id)) + " produced no output");
  }
  return out.size();
}

}  // namespace dtest
