// SPDX-FileCopyrightText: Copyright (c) 2026 The GRASSY Authors
// SPDX-License-Identifier: Apache-2.0

#include "grassy/serialize.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <system_error>

#include <unistd.h>

#include "grassy/error.hpp"

namespace grassy::io {
namespace {

static_assert(std::endian::native == std::endian::little, "blob I/O assumes a little-endian host");

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::string_view b) : b_(b) {}

  template <typename T>
  T get(const char* what) {
    need(sizeof(T), what);
    T v;
    std::memcpy(&v, b_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string_view bytes(std::size_t n, const char* what) {
    need(n, what);
    auto s = b_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == b_.size(); }

 private:
  void need(std::size_t n, const char* what) {
    if (b_.size() - pos_ < n)
      throw Error(ErrorKind::FormatError, std::string("blob truncated while reading ") + what + " at byte " + std::to_string(pos_));
  }
  std::string_view b_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_blob(std::span<const NamedTensor> tensors) {
  std::string out = "GRSY";
  put<std::uint32_t>(out, kBlobVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
  for (const NamedTensor& t : tensors) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.name.size()));
    out += t.name;
    put<std::uint32_t>(out, 2);
    put<std::uint64_t>(out, t.value.rows());
    put<std::uint64_t>(out, t.value.cols());
    for (double v : t.value.data()) put<double>(out, v);
  }
  return out;
}

std::vector<NamedTensor> decode_blob(std::string_view bytes) {
  Reader r(bytes);
  if (r.bytes(4, "magic") != "GRSY") throw Error(ErrorKind::FormatError, "not a parameter blob (bad magic)");
  const auto version = r.get<std::uint32_t>("version");
  if (version != kBlobVersion)
    throw Error(ErrorKind::FormatError, "unsupported blob version " + std::to_string(version));
  const auto count = r.get<std::uint32_t>("tensor count");
  std::vector<NamedTensor> out;
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor t;
    const auto len = r.get<std::uint32_t>("name length");
    t.name = std::string(r.bytes(len, "name"));
    const auto rank = r.get<std::uint32_t>("rank");
    if (rank > 2) throw Error(ErrorKind::FormatError, t.name + ": rank " + std::to_string(rank) + " not supported");
    std::uint64_t dims[2] = {1, 1};
    for (std::uint32_t d = 0; d < rank; ++d) dims[d + (2 - rank)] = r.get<std::uint64_t>("dimension");
    if (dims[0] != 0 && dims[1] > (bytes.size() / 8) / dims[0])
      throw Error(ErrorKind::FormatError, t.name + ": dimensions exceed blob size");
    std::vector<double> values(dims[0] * dims[1]);
    for (double& v : values) v = r.get<double>("values");
    t.value = Matrix(dims[0], dims[1], std::move(values));
    out.push_back(std::move(t));
  }
  if (!r.done()) throw Error(ErrorKind::FormatError, "trailing bytes after last tensor");
  return out;
}

void save_parameters(const std::filesystem::path& path, std::span<const ad::Parameter* const> params) {
  std::vector<NamedTensor> tensors;
  for (const ad::Parameter* p : params) tensors.push_back({p->name, p->value});
  atomic_write(path, encode_blob(tensors));
}

void load_parameters(const std::filesystem::path& path, std::span<ad::Parameter* const> params) {
  std::map<std::string, Matrix> by_name;
  for (NamedTensor& t : decode_blob(read_file(path))) by_name[t.name] = std::move(t.value);
  for (ad::Parameter* p : params) {
    auto it = by_name.find(p->name);
    if (it == by_name.end()) throw Error(ErrorKind::FormatError, path.string() + ": missing tensor " + p->name);
    if (!it->second.same_shape(p->value))
      throw Error(ErrorKind::FormatError, path.string() + ": tensor " + p->name + " has shape " +
                                              shape_string(it->second) + ", expected " + shape_string(p->value));
    p->value = it->second;
    p->grad = Matrix(p->value.rows(), p->value.cols());
  }
}

void atomic_write(const std::filesystem::path& path, std::string_view contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorKind::IoError, "cannot open " + tmp.string() + " for writing");
    f.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    f.flush();
    if (!f) throw Error(ErrorKind::IoError, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorKind::IoError, "cannot rename into " + path.string());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace grassy::io
