#include "mfg/io.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "mfg/errors.hpp"
#include "mfg/sde.hpp"

namespace mfg {

namespace {

constexpr char kMagic[8] = {'M', 'F', 'G', 'F', 'L', 'D', '0', '1'};

template <typename T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) fail(Errc::io_failure, "truncated field file");
  return v;
}

}  // namespace

void write_field(const std::string& path, const SpaceTimeField& field, bool is_density) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(Errc::io_failure, "cannot open " + path + " for writing");
  os.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(field.grid.dim));
  put<std::uint32_t>(os, is_density ? 1u : 0u);
  for (int k = 0; k < field.grid.dim; ++k) put<double>(os, field.grid.lo[k]);
  put<double>(os, field.grid.h);
  for (int k = 0; k < field.grid.dim; ++k)
    put<std::uint32_t>(os, static_cast<std::uint32_t>(field.grid.shape[k]));
  put<double>(os, field.t0);
  put<double>(os, field.dt);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(field.n_steps));
  put<std::uint64_t>(os, field.drift_hash);

  // mask as (start, length) runs over linear cell order
  std::vector<std::pair<std::uint32_t, std::uint32_t>> runs;
  for (std::size_t i = 0; i < field.mask.cells.size();) {
    std::size_t j = i;
    while (j + 1 < field.mask.cells.size() &&
           field.mask.cells[j + 1] == field.mask.cells[j] + 1)
      ++j;
    runs.emplace_back(static_cast<std::uint32_t>(field.mask.cells[i]),
                      static_cast<std::uint32_t>(j - i + 1));
    i = j + 1;
  }
  put<std::uint64_t>(os, runs.size());
  for (const auto& r : runs) {
    put<std::uint32_t>(os, r.first);
    put<std::uint32_t>(os, r.second);
  }
  put<std::uint32_t>(os, static_cast<std::uint32_t>(field.scheme_info.size()));
  os.write(field.scheme_info.data(), static_cast<std::streamsize>(field.scheme_info.size()));

  for (int n = 0; n <= field.n_steps; ++n)
    for (int i = 0; i < field.mask.size(); ++i) put<double>(os, field.values(n, i));
  if (!os) fail(Errc::io_failure, "write failed for " + path);
}

SpaceTimeField read_field(const std::string& path, bool* is_density) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(Errc::io_failure, "cannot open " + path);
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    fail(Errc::io_failure, path + " is not a field file");
  SpaceTimeField f;
  f.grid.dim = static_cast<int>(get<std::uint32_t>(is));
  if (f.grid.dim < 1 || f.grid.dim > kMaxDim) fail(Errc::io_failure, "bad dimension");
  const bool density = get<std::uint32_t>(is) != 0;
  if (is_density) *is_density = density;
  f.grid.lo.resize(f.grid.dim);
  for (int k = 0; k < f.grid.dim; ++k) f.grid.lo[k] = get<double>(is);
  f.grid.h = get<double>(is);
  for (int k = 0; k < f.grid.dim; ++k) f.grid.shape[k] = static_cast<int>(get<std::uint32_t>(is));
  f.t0 = get<double>(is);
  f.dt = get<double>(is);
  f.n_steps = static_cast<int>(get<std::uint32_t>(is));
  f.drift_hash = get<std::uint64_t>(is);

  const std::uint64_t n_runs = get<std::uint64_t>(is);
  f.mask.index_of.assign(f.grid.cell_count(), -1);
  for (std::uint64_t r = 0; r < n_runs; ++r) {
    const std::uint32_t start = get<std::uint32_t>(is);
    const std::uint32_t len = get<std::uint32_t>(is);
    for (std::uint32_t j = 0; j < len; ++j) {
      f.mask.index_of[start + j] = static_cast<std::int32_t>(f.mask.cells.size());
      f.mask.cells.push_back(static_cast<std::int32_t>(start + j));
    }
  }
  const std::uint32_t info_len = get<std::uint32_t>(is);
  f.scheme_info.resize(info_len);
  is.read(f.scheme_info.data(), info_len);

  f.values.resize(f.n_steps + 1, f.mask.size());
  for (int n = 0; n <= f.n_steps; ++n)
    for (int i = 0; i < f.mask.size(); ++i) f.values(n, i) = get<double>(is);
  return f;
}

DensityField read_density(const std::string& path) {
  DensityField m;
  static_cast<SpaceTimeField&>(m) = read_field(path);
  return m;
}

void write_slice_csv(const std::string& path, const SpaceTimeField& field, int slice) {
  std::ofstream os(path);
  if (!os) fail(Errc::io_failure, "cannot open " + path + " for writing");
  os.precision(17);
  os << "t";
  for (int k = 0; k < field.grid.dim; ++k) os << ",x" << k;
  os << ",value\n";
  const int lo = slice < 0 ? 0 : slice;
  const int hi = slice < 0 ? field.n_steps : slice;
  for (int n = lo; n <= hi; ++n) {
    for (int i = 0; i < field.mask.size(); ++i) {
      const Vec x = field.grid.center(field.mask.cells[i]);
      os << field.time_of(n);
      for (int k = 0; k < field.grid.dim; ++k) os << ',' << x[k];
      os << ',' << field.values(n, i) << '\n';
    }
  }
}

void write_paths(const std::string& path, const StoredPaths& paths) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(Errc::io_failure, "cannot open " + path + " for writing");
  static constexpr char magic[8] = {'M', 'F', 'G', 'P', 'T', 'H', '0', '1'};
  os.write(magic, sizeof(magic));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(paths.dim));
  put<std::uint64_t>(os, static_cast<std::uint64_t>(paths.n_paths));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(paths.times.size()));
  for (double t : paths.times) put<double>(os, t);
  for (std::size_t s = 0; s < paths.times.size(); ++s)
    for (long p = 0; p < paths.n_paths; ++p) {
      put<double>(os, static_cast<double>(p));
      put<double>(os, paths.times[s]);
      for (int k = 0; k < paths.dim; ++k)
        put<double>(os, paths.positions[(s * paths.n_paths + p) * paths.dim + k]);
    }
  for (long p = 0; p < paths.n_paths; ++p) {
    put<std::uint8_t>(os, paths.exited[p]);
    put<double>(os, paths.exit_time[p]);
  }
  if (!os) fail(Errc::io_failure, "write failed for " + path);
}

StoredPaths read_paths(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(Errc::io_failure, "cannot open " + path);
  char magic[8];
  is.read(magic, sizeof(magic));
  static constexpr char expect[8] = {'M', 'F', 'G', 'P', 'T', 'H', '0', '1'};
  if (!is || std::memcmp(magic, expect, sizeof(expect)) != 0)
    fail(Errc::io_failure, path + " is not a path file");
  StoredPaths out;
  out.dim = static_cast<int>(get<std::uint32_t>(is));
  out.n_paths = static_cast<long>(get<std::uint64_t>(is));
  const std::uint32_t n_snap = get<std::uint32_t>(is);
  out.times.resize(n_snap);
  for (auto& t : out.times) t = get<double>(is);
  out.positions.resize(static_cast<std::size_t>(n_snap) * out.n_paths * out.dim);
  for (std::size_t s = 0; s < n_snap; ++s)
    for (long p = 0; p < out.n_paths; ++p) {
      get<double>(is);  // path id
      get<double>(is);  // time
      for (int k = 0; k < out.dim; ++k)
        out.positions[(s * out.n_paths + p) * out.dim + k] = get<double>(is);
    }
  out.exited.resize(out.n_paths);
  out.exit_time.resize(out.n_paths);
  for (long p = 0; p < out.n_paths; ++p) {
    out.exited[p] = get<std::uint8_t>(is);
    out.exit_time[p] = get<double>(is);
  }
  return out;
}

std::string read_text_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) fail(Errc::io_failure, "cannot open " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream os(path);
  if (!os) fail(Errc::io_failure, "cannot open " + path + " for writing");
  os << content;
  if (!os) fail(Errc::io_failure, "write failed for " + path);
}

}  // namespace mfg
