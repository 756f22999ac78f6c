#include "obq/manifest.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <memory>
#include <stdexcept>

#include <json.hpp>

#include "obq/io.hpp"

namespace obq {

std::string sha256_file_hex(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw std::runtime_error("cannot open '" + path + "' for hashing");
  const std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(
      EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("cannot initialize SHA-256");
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    const std::streamsize got = in.gcount();
    if (got > 0 &&
        EVP_DigestUpdate(ctx.get(), buf, static_cast<std::size_t>(got)) != 1)
      throw std::runtime_error("SHA-256 update failed");
  }
  if (in.bad()) throw std::runtime_error("failed while reading '" + path + "'");
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1)
    throw std::runtime_error("SHA-256 finalize failed");
  std::string hex(2 * len, '0');
  static const char* kHex = "0123456789abcdef";
  for (unsigned int i = 0; i < len; ++i) {
    hex[2 * i] = kHex[digest[i] >> 4];
    hex[2 * i + 1] = kHex[digest[i] & 0xf];
  }
  return hex;
}

std::string iso8601_utc_now() {
  std::time_t now;
  if (const char* sde = std::getenv("SOURCE_DATE_EPOCH"); sde && *sde) {
    char* end = nullptr;
    const long long v = std::strtoll(sde, &end, 10);
    if (end == sde || *end != '\0')
      throw std::runtime_error("SOURCE_DATE_EPOCH is not an integer");
    now = static_cast<std::time_t>(v);
  } else {
    now = std::time(nullptr);
  }
  std::tm tm{};
  if (!gmtime_r(&now, &tm))
    throw std::runtime_error("cannot convert time to UTC");
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02dZ",
                tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday, tm.tm_hour,
                tm.tm_min, tm.tm_sec);
  return buf;
}

std::string command_line_of(int argc, const char* const* argv) {
  std::string out;
  for (int i = 0; i < argc; ++i) {
    if (i) out += ' ';
    const std::string arg = argv[i];
    if (arg.empty() || arg.find_first_of(" \t\"'\\$") != std::string::npos) {
      out += '\'';
      for (const char c : arg)
        out += (c == '\'') ? std::string("'\\''") : std::string(1, c);
      out += '\'';
    } else {
      out += arg;
    }
  }
  return out;
}

void write_manifest(const std::string& manifest_path, const RunManifest& m) {
  nlohmann::json inputs = nlohmann::json::array();
  for (const auto& [path, digest] : m.inputs)
    inputs.push_back({{"path", path}, {"sha256", digest}});
  const nlohmann::json j{{"command_line", m.command_line},
                         {"seed", m.seed},
                         {"version", m.version},
                         {"inputs", inputs},
                         {"timestamp", m.timestamp}};
  write_json(manifest_path, j);
}

void write_manifest_alongside(const std::string& output_path,
                              const RunManifest& m) {
  write_manifest(output_path + ".manifest.json", m);
}

}  // namespace obq
