// Copyright 2026 The qspace Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "qspace/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "qspace/error.hpp"

namespace qspace {

namespace {

using json = nlohmann::json;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

void put_f32(std::string& out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }

class ByteReader {
 public:
  explicit ByteReader(const std::string& bytes, std::string what) : bytes_(bytes), what_(std::move(what)) {}

  std::uint32_t u32() {
    if (pos_ + 4 > bytes_.size()) throw IoError(what_ + ": unexpected end of file");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + static_cast<std::size_t>(i)])) << (8 * i);
    pos_ += 4;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string take(std::size_t n) {
    if (pos_ + n > bytes_.size()) throw IoError(what_ + ": unexpected end of file");
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  const std::string& bytes_;
  std::string what_;
  std::size_t pos_ = 0;
};

double parse_double(const std::string& text, const std::string& context) {
  if (text == "inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) throw IoError(context + ": cannot parse number '" + text + "'");
  return v;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::vector<std::string> words(const std::string& s) {
  std::istringstream is(s);
  std::vector<std::string> out;
  for (std::string w; is >> w;) out.push_back(w);
  return out;
}

struct QvolHeader {
  Dims dims;
  std::array<double, 3> voxel_size{1.0, 1.0, 1.0};
  double b_value = 0.0;
  int channels = 0;
  std::string data_file;
  std::string b0_file;
  std::vector<Direction> dirs;
};

std::string header_text(const QvolHeader& h) {
  std::ostringstream os;
  os << "QVOL 1\n";
  os << "dims: " << h.dims.x << ' ' << h.dims.y << ' ' << h.dims.z << '\n';
  os << "voxel_size: " << format_double(h.voxel_size[0]) << ' ' << format_double(h.voxel_size[1]) << ' '
     << format_double(h.voxel_size[2]) << '\n';
  os << "b_value: " << format_double(h.b_value) << '\n';
  os << "channels: " << h.channels << '\n';
  os << "data_type: float32\n";
  os << "byte_order: little-endian\n";
  os << "layout: ((x*Y+y)*Z+z)*D+d\n";
  os << "data_file: " << h.data_file << '\n';
  if (!h.b0_file.empty()) os << "b0_file: " << h.b0_file << '\n';
  for (const auto& d : h.dirs) os << "direction: " << format_double(d.theta) << ' ' << format_double(d.phi) << '\n';
  return os.str();
}

QvolHeader parse_header(const fs::path& path) {
  const std::string text = read_file(path);
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || trim(line) != "QVOL 1") throw IoError(path.string() + ": not a QVOL header");
  QvolHeader h;
  const std::string ctx = path.string();
  bool have_dims = false, have_channels = false;
  while (std::getline(is, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto colon = line.find(':');
    if (colon == std::string::npos) throw IoError(ctx + ": malformed line '" + line + "'");
    const std::string key = trim(line.substr(0, colon));
    const std::string value = trim(line.substr(colon + 1));
    const auto w = words(value);
    if (key == "dims") {
      if (w.size() != 3) throw IoError(ctx + ": dims needs three values");
      h.dims = {std::stoi(w[0]), std::stoi(w[1]), std::stoi(w[2])};
      have_dims = true;
    } else if (key == "voxel_size") {
      if (w.size() != 3) throw IoError(ctx + ": voxel_size needs three values");
      for (int i = 0; i < 3; ++i) h.voxel_size[static_cast<std::size_t>(i)] = parse_double(w[static_cast<std::size_t>(i)], ctx);
    } else if (key == "b_value") {
      h.b_value = parse_double(value, ctx);
    } else if (key == "channels") {
      h.channels = std::stoi(value);
      have_channels = true;
    } else if (key == "data_type") {
      if (value != "float32") throw IoError(ctx + ": unsupported data_type " + value);
    } else if (key == "byte_order") {
      if (value != "little-endian") throw IoError(ctx + ": unsupported byte_order " + value);
    } else if (key == "data_file") {
      h.data_file = value;
    } else if (key == "b0_file") {
      h.b0_file = value;
    } else if (key == "direction") {
      if (w.size() != 2) throw IoError(ctx + ": direction needs theta and phi");
      h.dirs.push_back({parse_double(w[0], ctx), parse_double(w[1], ctx)});
    } else if (key != "layout") {
      throw IoError(ctx + ": unknown header key '" + key + "'");
    }
  }
  if (!have_dims || !have_channels || h.data_file.empty()) throw IoError(ctx + ": incomplete QVOL header");
  if (h.dims.x <= 0 || h.dims.y <= 0 || h.dims.z <= 0 || h.channels <= 0) throw IoError(ctx + ": invalid shape");
  return h;
}

void write_raw(const fs::path& path, const RowMatrix& data) {
  std::string bytes;
  bytes.reserve(static_cast<std::size_t>(data.size()) * 4);
  for (Eigen::Index r = 0; r < data.rows(); ++r)
    for (Eigen::Index c = 0; c < data.cols(); ++c) put_f32(bytes, static_cast<float>(data(r, c)));
  write_file(path, bytes);
}

RowMatrix read_raw(const fs::path& path, std::size_t rows, std::size_t cols) {
  const std::string bytes = read_file(path);
  if (bytes.size() != rows * cols * 4) {
    throw IoError(path.string() + ": expected " + std::to_string(rows * cols * 4) + " bytes, found " +
                  std::to_string(bytes.size()));
  }
  ByteReader reader(bytes, path.string());
  RowMatrix out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index r = 0; r < out.rows(); ++r)
    for (Eigen::Index c = 0; c < out.cols(); ++c) out(r, c) = reader.f32();
  return out;
}

fs::path sibling(const fs::path& header, const std::string& name) { return header.parent_path() / name; }

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

}  // namespace

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
  if (!out) throw IoError("failed writing " + path.string());
}

std::string directions_csv(const DirectionSet& dirs) {
  std::string out = "theta,phi\n";
  for (const auto& d : dirs) out += format_double(d.theta) + "," + format_double(d.phi) + "\n";
  return out;
}

void write_directions_csv(const fs::path& path, const DirectionSet& dirs) { write_file(path, directions_csv(dirs)); }

DirectionSet read_directions_csv(const fs::path& path) {
  const std::string text = read_file(path);
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || trim(line) != "theta,phi") {
    throw IoError(path.string() + ": expected header 'theta,phi'");
  }
  DirectionSet dirs;
  while (std::getline(is, line)) {
    line = trim(line);
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != 2) throw IoError(path.string() + ": expected two columns in '" + line + "'");
    const double theta = parse_double(trim(cells[0]), path.string());
    const double phi = parse_double(trim(cells[1]), path.string());
    dirs.push_back({theta, phi});
  }
  if (dirs.empty()) throw IoError(path.string() + ": no directions");
  return dirs;
}

void write_qvol(const fs::path& header, const DwiVolume& vol) {
  vol.validate();
  const std::string stem = header.stem().string();
  QvolHeader h;
  h.dims = vol.dims;
  h.voxel_size = vol.voxel_size;
  h.b_value = vol.b_value;
  h.channels = static_cast<int>(vol.channels());
  h.data_file = stem + ".raw";
  h.b0_file = stem + "_b0.qvh";
  h.dirs = vol.dirs.values();
  write_file(header, header_text(h));
  write_raw(sibling(header, h.data_file), vol.data);
  write_scalar_qvol(sibling(header, h.b0_file), vol.dims, vol.b0, vol.voxel_size);
}

DwiVolume read_qvol(const fs::path& header) {
  const QvolHeader h = parse_header(header);
  if (h.dirs.size() != static_cast<std::size_t>(h.channels)) {
    throw IoError(header.string() + ": " + std::to_string(h.channels) + " channels but " +
                  std::to_string(h.dirs.size()) + " directions");
  }
  DwiVolume vol;
  vol.dims = h.dims;
  vol.voxel_size = h.voxel_size;
  vol.b_value = h.b_value;
  vol.dirs = DirectionSet(h.dirs);
  vol.data = read_raw(sibling(header, h.data_file), h.dims.voxels(), static_cast<std::size_t>(h.channels));
  if (h.b0_file.empty()) {
    vol.b0 = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(h.dims.voxels()));
  } else {
    auto [dims, b0] = read_scalar_qvol(sibling(header, h.b0_file));
    if (!(dims == h.dims)) throw IoError(header.string() + ": b0 dimensions differ");
    vol.b0 = std::move(b0);
  }
  vol.validate();
  return vol;
}

void write_scalar_qvol(const fs::path& header, const Dims& dims, const Eigen::VectorXd& values,
                       const std::array<double, 3>& voxel_size) {
  if (static_cast<std::size_t>(values.size()) != dims.voxels()) throw Error("scalar volume size mismatch");
  QvolHeader h;
  h.dims = dims;
  h.voxel_size = voxel_size;
  h.channels = 1;
  h.data_file = header.stem().string() + ".raw";
  write_file(header, header_text(h));
  write_raw(sibling(header, h.data_file), RowMatrix(values));
}

std::pair<Dims, Eigen::VectorXd> read_scalar_qvol(const fs::path& header) {
  const QvolHeader h = parse_header(header);
  if (h.channels != 1) throw IoError(header.string() + ": expected a single-channel volume");
  const RowMatrix data = read_raw(sibling(header, h.data_file), h.dims.voxels(), 1);
  return {h.dims, data.col(0)};
}

void write_qtrk(const fs::path& path, const Tractogram& t) {
  std::string bytes = "QTRK";
  put_u32(bytes, static_cast<std::uint32_t>(t.streamlines.size()));
  for (const auto& s : t.streamlines) {
    put_u32(bytes, static_cast<std::uint32_t>(s.size()));
    for (const auto& p : s) {
      put_f32(bytes, static_cast<float>(p.x()));
      put_f32(bytes, static_cast<float>(p.y()));
      put_f32(bytes, static_cast<float>(p.z()));
    }
  }
  write_file(path, bytes);
}

Tractogram read_qtrk(const fs::path& path) {
  const std::string bytes = read_file(path);
  ByteReader reader(bytes, path.string());
  if (reader.take(4) != "QTRK") throw IoError(path.string() + ": bad magic");
  Tractogram t;
  const std::uint32_t count = reader.u32();
  t.streamlines.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t npts = reader.u32();
    Streamline s;
    s.reserve(npts);
    for (std::uint32_t k = 0; k < npts; ++k) {
      const float x = reader.f32(), y = reader.f32(), z = reader.f32();
      s.emplace_back(x, y, z);
    }
    t.streamlines.push_back(std::move(s));
  }
  if (!reader.done()) throw IoError(path.string() + ": trailing bytes");
  return t;
}

void write_labels_csv(const fs::path& path, const std::vector<int>& labels) {
  std::string out = "index,label\n";
  for (std::size_t i = 0; i < labels.size(); ++i) out += std::to_string(i) + "," + std::to_string(labels[i]) + "\n";
  write_file(path, out);
}

std::vector<int> read_labels_csv(const fs::path& path) {
  const std::string text = read_file(path);
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || trim(line) != "index,label") throw IoError(path.string() + ": expected header 'index,label'");
  std::vector<int> labels;
  while (std::getline(is, line)) {
    line = trim(line);
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != 2) throw IoError(path.string() + ": malformed row '" + line + "'");
    const auto idx = static_cast<std::size_t>(std::stoul(cells[0]));
    if (idx != labels.size()) throw IoError(path.string() + ": rows must be in index order");
    labels.push_back(std::stoi(cells[1]));
  }
  return labels;
}

void write_truth(const fs::path& path, const PhantomTruth& truth, const PhantomSpec& spec) {
  json j;
  j["format"] = "qspace-truth";
  j["version"] = 1;
  j["preset"] = truth.preset;
  j["dims"] = {truth.dims.x, truth.dims.y, truth.dims.z};
  j["n_dirs"] = spec.n_dirs;
  j["seed"] = spec.seed;
  j["b_value"] = spec.b_value;
  j["eigenvalues"] = {spec.eigenvalues(0), spec.eigenvalues(1), spec.eigenvalues(2)};
  j["radius"] = spec.radius;
  j["roi_depth"] = spec.roi_depth;
  j["background_diffusivity"] = truth.background_diffusivity;
  json bundles = json::array();
  for (std::size_t b = 0; b < truth.bundles.size(); ++b) {
    json bj;
    bj["radius"] = truth.bundles[b].radius;
    json line = json::array();
    for (const auto& p : truth.bundles[b].centerline) line.push_back(vec_json(p));
    bj["centerline"] = line;
    json rois = json::array();
    for (int end = 0; end < 2; ++end) {
      json voxels = json::array();
      for (std::size_t v : truth.rois[b][static_cast<std::size_t>(end)]) {
        const auto c = truth.dims.coords(v);
        voxels.push_back({c[0], c[1], c[2]});
      }
      rois.push_back(voxels);
    }
    bj["rois"] = rois;
    bundles.push_back(bj);
  }
  j["bundles"] = bundles;
  write_file(path, j.dump(1) + "\n");
}

std::pair<PhantomTruth, PhantomSpec> read_truth(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
    if (j.at("format").get<std::string>() != "qspace-truth") throw IoError(path.string() + ": not a truth file");
    PhantomSpec spec = parse_preset(j.at("preset").get<std::string>());
    const auto dims = j.at("dims").get<std::vector<int>>();
    if (dims.size() != 3) throw IoError(path.string() + ": dims must have three entries");
    spec.dims = {dims[0], dims[1], dims[2]};
    spec.n_dirs = j.at("n_dirs").get<int>();
    spec.seed = j.at("seed").get<std::uint64_t>();
    spec.b_value = j.at("b_value").get<double>();
    const auto ev = j.at("eigenvalues").get<std::vector<double>>();
    if (ev.size() != 3) throw IoError(path.string() + ": eigenvalues must have three entries");
    spec.eigenvalues = {ev[0], ev[1], ev[2]};
    spec.radius = j.at("radius").get<double>();
    spec.roi_depth = j.at("roi_depth").get<double>();
    PhantomTruth truth = phantom_truth(spec);
    if (truth.bundles.size() != j.at("bundles").size()) throw IoError(path.string() + ": bundle count mismatch");
    return {std::move(truth), std::move(spec)};
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void write_recon_params(const fs::path& path, const ReconstructionParams& params) {
  json j;
  j["format"] = "qspace-recon";
  j["version"] = 1;
  j["mode"] = to_string(params.mode);
  j["rows"] = params.weights.rows();
  j["cols"] = params.weights.cols();
  std::vector<double> w;
  for (Eigen::Index r = 0; r < params.weights.rows(); ++r)
    for (Eigen::Index c = 0; c < params.weights.cols(); ++c) w.push_back(params.weights(r, c));
  j["weights"] = w;
  j["bias"] = std::vector<double>(params.bias.data(), params.bias.data() + params.bias.size());
  write_file(path, j.dump() + "\n");
}

ReconstructionParams read_recon_params(const fs::path& path) {
  try {
    const json j = json::parse(read_file(path));
    if (j.at("format").get<std::string>() != "qspace-recon") throw IoError(path.string() + ": not a recon file");
    ReconstructionParams p;
    p.mode = parse_recon_mode(j.at("mode").get<std::string>());
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    const auto w = j.at("weights").get<std::vector<double>>();
    const auto b = j.at("bias").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(w.size()) != rows * cols || static_cast<Eigen::Index>(b.size()) != rows) {
      throw IoError(path.string() + ": weight shapes do not match");
    }
    p.weights.resize(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) p.weights(r, c) = w[static_cast<std::size_t>(r * cols + c)];
    p.bias = Eigen::Map<const Eigen::VectorXd>(b.data(), rows);
    return p;
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void Report::add(const std::string& key, const std::string& value) { fields_.emplace_back(key, value); }
void Report::add(const std::string& key, double value) { fields_.emplace_back(key, format_double(value)); }
void Report::add(const std::string& key, long long value) { fields_.emplace_back(key, std::to_string(value)); }

std::string Report::text() const {
  std::string out;
  for (const auto& [k, v] : fields_) out += k + " = " + v + "\n";
  return out;
}

std::string Report::csv() const {
  std::string header, row;
  for (std::size_t i = 0; i < fields_.size(); ++i) {
    if (i > 0) {
      header += ',';
      row += ',';
    }
    header += fields_[i].first;
    row += fields_[i].second;
  }
  return header + "\n" + row + "\n";
}

void Report::write_text(const fs::path& path) const { write_file(path, text()); }
void Report::write_csv(const fs::path& path) const { write_file(path, csv()); }

}  // namespace qspace
