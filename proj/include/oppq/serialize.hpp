#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include "oppq/errors.hpp"

namespace oppq {

/// FNV-1a 64-bit hash; stable across platforms and runs, used for cache file
/// names, payload checksums, and run-config fingerprints.
inline std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (const unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string hex16(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[static_cast<size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return s;
}

/// Whole-file slurp (binary, so checksums see exact bytes).
inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    if (!in.good() && !in.eof()) throw IoError("read failed on " + path.string());
    return ss.str();
}

/// Atomic-ish text write: temp file in the same directory, then rename.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    const std::filesystem::path tmp = path.parent_path() / (path.filename().string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot create " + tmp.string());
        out << content;
        if (!out.good()) throw IoError("write failed on " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw IoError("cannot move " + tmp.string() + " into place: " + ec.message());
    }
}

/// Line-oriented reader for the cache / run-record text formats.
class LineReader {
  public:
    explicit LineReader(std::string text) : text_(std::move(text)) {}

    bool next(std::string& line) {
        if (pos_ >= text_.size()) return false;
        const size_t nl = text_.find('\n', pos_);
        if (nl == std::string::npos) {
            line = text_.substr(pos_);
            pos_ = text_.size();
        } else {
            line = text_.substr(pos_, nl - pos_);
            pos_ = nl + 1;
        }
        return true;
    }

    /// Next line must start with "<key> "; returns the rest.
    std::string expect(const std::string& key) {
        std::string line;
        if (!next(line)) throw IoError("unexpected end of data, wanted '" + key + "'");
        if (line == key) return "";
        if (line.rfind(key + " ", 0) != 0)
            throw IoError("expected '" + key + "', got '" + line + "'");
        return line.substr(key.size() + 1);
    }

    std::string rest() const { return text_.substr(pos_); }

  private:
    std::string text_;
    size_t pos_ = 0;
};

}  // namespace oppq
