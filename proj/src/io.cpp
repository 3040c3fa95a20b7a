#include "thermopinn/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace thermopinn::io {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t fnv1a64_file(const std::string& path) { return fnv1a64(read_text_file(path)); }

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingInputError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << content;
  if (!out) throw IoError("write failed for '" + path + "'");
}

namespace {

double parse_double(const std::string& token, const std::string& context) {
  char* end = nullptr;
  double v = std::strtod(token.c_str(), &end);
  if (end == token.c_str() || *end != '\0')
    throw IoError(context + ": bad number '" + token + "'");
  return v;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    std::size_t next = line.find(sep, pos);
    if (next == std::string::npos) {
      out.push_back(line.substr(pos));
      break;
    }
    out.push_back(line.substr(pos, next - pos));
    pos = next + 1;
  }
  return out;
}

std::vector<std::string> non_empty_lines(const std::string& text) {
  std::vector<std::string> lines;
  for (auto& raw : split(text, '\n')) {
    std::string line = raw;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

}  // namespace

// -- profiles ---------------------------------------------------------------------

void write_profiles_csv(const std::string& path, const OperatingProfiles& profiles) {
  std::string out = "t_s,K_pu,theta_A_K,theta_TO_K\n";
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    out += format_double(profiles.times[i]);
    out += ',';
    out += format_double(profiles.load[i]);
    out += ',';
    out += format_double(profiles.theta_a[i]);
    out += ',';
    out += format_double(profiles.theta_to[i]);
    out += '\n';
  }
  write_text_file(path, out);
}

OperatingProfiles read_profiles_csv(const std::string& path) {
  auto lines = non_empty_lines(read_text_file(path));
  if (lines.empty() || lines[0] != "t_s,K_pu,theta_A_K,theta_TO_K")
    throw IoError(path + ": expected header t_s,K_pu,theta_A_K,theta_TO_K");
  OperatingProfiles p;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    auto cells = split(lines[i], ',');
    if (cells.size() != 4) throw IoError(path + ": row " + std::to_string(i) + " needs 4 columns");
    std::string ctx = path + ":" + std::to_string(i + 1);
    p.times.push_back(parse_double(cells[0], ctx));
    p.load.push_back(parse_double(cells[1], ctx));
    p.theta_a.push_back(parse_double(cells[2], ctx));
    p.theta_to.push_back(parse_double(cells[3], ctx));
  }
  p.validate();
  return p;
}

// -- field grids --------------------------------------------------------------------

namespace {

void write_grid_meta(const std::string& path, int nx, int nt, std::uint64_t cfg_hash,
                     const std::string& columns) {
  char hash[32];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(cfg_hash));
  std::string meta = "nx=" + std::to_string(nx) + "\nnt=" + std::to_string(nt) +
                     "\ncfg_hash=" + hash + "\ncolumns=" + columns + "\n";
  write_text_file(path + ".meta", meta);
}

}  // namespace

void write_grid_csv(const std::string& path, const FieldGrid& grid, std::uint64_t cfg_hash) {
  std::string header = "x_m,t_s,theta_K";
  if (grid.has_std()) header += ",std_K";
  if (grid.has_ageing()) header += ",ageing_pu";
  std::string out = header + "\n";
  for (int it = 0; it < grid.nt(); ++it) {
    for (int ix = 0; ix < grid.nx(); ++ix) {
      std::size_t cell = std::size_t(it) * std::size_t(grid.nx()) + std::size_t(ix);
      out += format_double(grid.xs[std::size_t(ix)]);
      out += ',';
      out += format_double(grid.ts[std::size_t(it)]);
      out += ',';
      out += format_double(grid.theta[cell]);
      if (grid.has_std()) {
        out += ',';
        out += format_double(grid.std_dev[cell]);
      }
      if (grid.has_ageing()) {
        out += ',';
        out += format_double(grid.ageing[cell]);
      }
      out += '\n';
    }
  }
  write_text_file(path, out);
  std::string columns = "theta_K";
  if (grid.has_std()) columns += ",std_K";
  if (grid.has_ageing()) columns += ",ageing_pu";
  write_grid_meta(path, grid.nx(), grid.nt(), cfg_hash, columns);
}

FieldGrid read_grid_csv(const std::string& path) {
  auto meta_lines = non_empty_lines(read_text_file(path + ".meta"));
  int nx = 0, nt = 0;
  for (const auto& line : meta_lines) {
    if (line.rfind("nx=", 0) == 0) nx = std::stoi(line.substr(3));
    if (line.rfind("nt=", 0) == 0) nt = std::stoi(line.substr(3));
  }
  if (nx < 3 || nt < 3) throw IoError(path + ".meta: bad nx/nt");

  auto lines = non_empty_lines(read_text_file(path));
  if (lines.empty()) throw IoError(path + ": empty grid file");
  auto header = split(lines[0], ',');
  bool has_std = false, has_ageing = false;
  if (header.size() < 3 || header[0] != "x_m" || header[1] != "t_s" || header[2] != "theta_K")
    throw IoError(path + ": expected header x_m,t_s,theta_K[,std_K][,ageing_pu]");
  for (std::size_t c = 3; c < header.size(); ++c) {
    if (header[c] == "std_K")
      has_std = true;
    else if (header[c] == "ageing_pu")
      has_ageing = true;
    else
      throw IoError(path + ": unknown column '" + header[c] + "'");
  }

  if (lines.size() != 1 + std::size_t(nx) * std::size_t(nt))
    throw IoError(path + ": row count does not match nx*nt from sidecar");

  FieldGrid grid;
  grid.xs.resize(std::size_t(nx));
  grid.ts.resize(std::size_t(nt));
  grid.theta.resize(std::size_t(nx) * std::size_t(nt));
  if (has_std) grid.std_dev.resize(grid.theta.size());
  if (has_ageing) grid.ageing.resize(grid.theta.size());

  for (int it = 0; it < nt; ++it) {
    for (int ix = 0; ix < nx; ++ix) {
      std::size_t row = 1 + std::size_t(it) * std::size_t(nx) + std::size_t(ix);
      auto cells = split(lines[row], ',');
      std::string ctx = path + ":" + std::to_string(row + 1);
      if (cells.size() != header.size()) throw IoError(ctx + ": wrong column count");
      grid.xs[std::size_t(ix)] = parse_double(cells[0], ctx);
      grid.ts[std::size_t(it)] = parse_double(cells[1], ctx);
      std::size_t cell = std::size_t(it) * std::size_t(nx) + std::size_t(ix);
      grid.theta[cell] = parse_double(cells[2], ctx);
      std::size_t c = 3;
      if (has_std) grid.std_dev[cell] = parse_double(cells[c++], ctx);
      if (has_ageing) grid.ageing[cell] = parse_double(cells[c++], ctx);
    }
  }
  grid.validate();
  return grid;
}

void write_error_csv(const std::string& path, const FieldGrid& error, const FieldGrid* zscore,
                     std::uint64_t cfg_hash) {
  std::string out = zscore != nullptr ? "x_m,t_s,error_K,zscore\n" : "x_m,t_s,error_K\n";
  for (int it = 0; it < error.nt(); ++it) {
    for (int ix = 0; ix < error.nx(); ++ix) {
      std::size_t cell = std::size_t(it) * std::size_t(error.nx()) + std::size_t(ix);
      out += format_double(error.xs[std::size_t(ix)]);
      out += ',';
      out += format_double(error.ts[std::size_t(it)]);
      out += ',';
      out += format_double(error.theta[cell]);
      if (zscore != nullptr) {
        out += ',';
        out += format_double(zscore->theta[cell]);
      }
      out += '\n';
    }
  }
  write_text_file(path, out);
  write_grid_meta(path, error.nx(), error.nt(), cfg_hash,
                  zscore != nullptr ? "error_K,zscore" : "error_K");
}

// -- checkpoints ----------------------------------------------------------------------

namespace {

std::string layer_line(const std::vector<int>& sizes) {
  std::string s = "layers";
  for (int v : sizes) s += " " + std::to_string(v);
  return s;
}

std::vector<int> parse_layer_line(const std::string& line, const std::string& path) {
  std::istringstream ss(line);
  std::string tag;
  ss >> tag;
  if (tag != "layers") throw IoError(path + ": expected 'layers ...' line");
  std::vector<int> sizes;
  int v;
  while (ss >> v) sizes.push_back(v);
  if (sizes.size() < 3) throw IoError(path + ": bad layer list");
  return sizes;
}

}  // namespace

void write_mlp_checkpoint(const std::string& path, const MlpParams& params) {
  std::string out = "thermopinn-mlp-v1\n" + layer_line(params.layer_sizes) + "\n";
  std::vector<double> flat = params.flatten();
  out += "theta " + std::to_string(flat.size()) + "\n";
  for (double v : flat) out += format_double(v) + "\n";
  write_text_file(path, out);
}

MlpParams read_mlp_checkpoint(const std::string& path) {
  auto lines = non_empty_lines(read_text_file(path));
  if (lines.size() < 3 || lines[0] != "thermopinn-mlp-v1")
    throw IoError(path + ": not a thermopinn-mlp-v1 checkpoint");
  auto sizes = parse_layer_line(lines[1], path);
  std::istringstream count_line(lines[2]);
  std::string tag;
  std::size_t count = 0;
  count_line >> tag >> count;
  if (tag != "theta" || count == 0) throw IoError(path + ": bad theta count line");
  if (lines.size() != 3 + count) throw IoError(path + ": parameter row count mismatch");
  std::vector<double> flat(count);
  for (std::size_t i = 0; i < count; ++i)
    flat[i] = parse_double(lines[3 + i], path + ":" + std::to_string(i + 4));
  return unflatten(sizes, flat);
}

void write_posterior_checkpoint(const std::string& path, const VariationalPosterior& post) {
  std::string out = "thermopinn-bpinn-v1\n" + layer_line(post.layer_sizes) + "\n";
  out += "mu_rho " + std::to_string(post.dim()) + "\n";
  for (std::size_t d = 0; d < post.dim(); ++d)
    out += format_double(post.mu[d]) + " " + format_double(post.rho[d]) + "\n";
  write_text_file(path, out);
}

VariationalPosterior read_posterior_checkpoint(const std::string& path) {
  auto lines = non_empty_lines(read_text_file(path));
  if (lines.size() < 3 || lines[0] != "thermopinn-bpinn-v1")
    throw IoError(path + ": not a thermopinn-bpinn-v1 checkpoint");
  VariationalPosterior post;
  post.layer_sizes = parse_layer_line(lines[1], path);
  std::istringstream count_line(lines[2]);
  std::string tag;
  std::size_t count = 0;
  count_line >> tag >> count;
  if (tag != "mu_rho" || count == 0) throw IoError(path + ": bad mu_rho count line");
  if (lines.size() != 3 + count) throw IoError(path + ": row count mismatch");
  post.mu.resize(count);
  post.rho.resize(count);
  for (std::size_t d = 0; d < count; ++d) {
    auto cells = split(lines[3 + d], ' ');
    if (cells.size() != 2) throw IoError(path + ": expected 'mu rho' pairs");
    std::string ctx = path + ":" + std::to_string(d + 4);
    post.mu[d] = parse_double(cells[0], ctx);
    post.rho[d] = parse_double(cells[1], ctx);
  }
  MlpParams check = unflatten(post.layer_sizes, post.mu);  // shape consistency
  (void)check;
  return post;
}

// -- telemetry --------------------------------------------------------------------------

void write_pinn_history_csv(const std::string& path, const TrainHistory& history) {
  bool has_data = !history.ldata.empty();
  std::string out = has_data ? "iter,total,L0,LBC,Lr,Ldata\n" : "iter,total,L0,LBC,Lr\n";
  for (std::size_t i = 0; i < history.size(); ++i) {
    out += std::to_string(i) + ',' + format_double(history.total[i]) + ',' +
           format_double(history.l0[i]) + ',' + format_double(history.lbc[i]) + ',' +
           format_double(history.lr[i]);
    if (has_data) out += ',' + format_double(history.ldata[i]);
    out += '\n';
  }
  write_text_file(path, out);
}

void write_elbo_history_csv(const std::string& path, const ElboHistory& history) {
  std::string out = "iter,elbo,klq_p,nll_0,nll_bc,nll_r\n";
  for (const auto& r : history) {
    out += std::to_string(r.iteration) + ',' + format_double(r.elbo) + ',' +
           format_double(r.klqp) + ',' + format_double(r.nll_0) + ',' + format_double(r.nll_bc) +
           ',' + format_double(r.nll_r) + '\n';
  }
  write_text_file(path, out);
}

void write_loss_of_life_csv(const std::string& path, const std::vector<double>& xs,
                            const std::vector<double>& equiv_hours) {
  std::string out = "x_m,equiv_hours\n";
  for (std::size_t i = 0; i < xs.size(); ++i)
    out += format_double(xs[i]) + ',' + format_double(equiv_hours[i]) + '\n';
  write_text_file(path, out);
}

// -- manifest ---------------------------------------------------------------------------

void write_manifest(const std::string& path, const Manifest& manifest) {
  char hex[32];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(manifest.config_hash));
  std::string out;
  out += "command=" + manifest.command + "\n";
  out += "version=" + manifest.version + "\n";
  out += "config_hash=" + std::string(hex) + "\n";
  out += "seed=" + std::to_string(manifest.seed) + "\n";
  out += "wall_ms=" + std::to_string(manifest.wall_ms) + "\n";
  for (const auto& [name, hash] : manifest.outputs) {
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(hash));
    out += "output=" + name + " fnv64=" + std::string(hex) + "\n";
  }
  write_text_file(path, out);
}

}  // namespace thermopinn::io
