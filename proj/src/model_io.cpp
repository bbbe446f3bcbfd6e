#include "strb/model_io.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <fstream>
#include <string_view>

namespace strb {

namespace {

constexpr std::string_view kMagic = "STRBRB02";

void put_u64(std::ostream& os, std::uint64_t v) {
  char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(buf, 8);
}

std::uint64_t get_u64(std::istream& is) {
  char buf[8];
  is.read(buf, 8);
  if (!is) throw ConfigError("model file: truncated header");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[i])) << (8 * i);
  return v;
}

void put_doubles(std::ostream& os, const double* data, std::uint64_t count) {
  put_u64(os, count);
  os.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * sizeof(double)));
}

std::vector<double> get_doubles(std::istream& is) {
  const std::uint64_t count = get_u64(is);
  std::vector<double> v(count);
  is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(count * sizeof(double)));
  if (!is) throw ConfigError("model file: truncated payload");
  return v;
}

void put_mat(std::ostream& os, const Mat& m) {
  put_u64(os, static_cast<std::uint64_t>(m.rows()));
  put_u64(os, static_cast<std::uint64_t>(m.cols()));
  os.write(reinterpret_cast<const char*>(m.data()),
           static_cast<std::streamsize>(sizeof(double) * m.size()));
}

Mat get_mat(std::istream& is) {
  const std::uint64_t r = get_u64(is);
  const std::uint64_t c = get_u64(is);
  Mat m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  is.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(sizeof(double) * m.size()));
  if (!is) throw ConfigError("model file: truncated matrix payload");
  return m;
}

}  // namespace

void save_model(const ReducedModel& model, const std::string& path) {
  if (!model.prob || !model.disc) throw ConfigError("save_model: uninitialized model");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("save_model: cannot open '" + path + "' for writing");

  nlohmann::json hdr;
  hdr["format"] = std::string(kMagic);
  hdr["problem"] = model.prob->id;
  hdr["mesh_hash"] = mesh_hash(model.prob->mesh);
  hdr["mode"] = model.unsteady ? "unsteady" : "steady";
  hdr["n_t"] = model.grid.n_t;
  hdr["bound_case"] = to_string(model.bound_case);
  hdr["n_free"] = model.prob->fe.n_free();
  hdr["n_cols"] = model.n_cols();
  hdr["cols_after_snapshot"] = model.cols_after_snapshot;
  hdr["part_q"] = {{"load_ids", model.part_q.load_ids}, {"op_ids", model.part_q.op_ids}};
  hdr["part_z"] = {{"load_ids", model.part_z.load_ids}, {"op_ids", model.part_z.op_ids}};
  const std::string hjson = hdr.dump();

  os.write(kMagic.data(), static_cast<std::streamsize>(kMagic.size()));
  put_u64(os, hjson.size());
  os.write(hjson.data(), static_cast<std::streamsize>(hjson.size()));

  const double scalars[3] = {model.alpha, model.grid.T, 0.0};
  put_doubles(os, scalars, 3);
  std::vector<double> mus;
  mus.reserve(model.sampled.size() * 3);
  for (const Mu& mu : model.sampled) {
    mus.push_back(mu[0]);
    mus.push_back(mu[1]);
    mus.push_back(mu[2]);
  }
  put_doubles(os, mus.data(), mus.size());

  put_mat(os, model.Z);
  put_u64(os, model.op_red.size());
  for (const Mat& q : model.op_red) put_mat(os, q);
  put_u64(os, model.load_red.size());
  for (const Vec& v : model.load_red) put_doubles(os, v.data(), static_cast<std::uint64_t>(v.size()));
  put_mat(os, model.part_q.rfac);
  put_mat(os, model.part_z.rfac);

  if (!os) throw ConfigError("save_model: write failure on '" + path + "'");
}

ReducedModel load_model(const std::string& path, const OcpProblem& p) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("load_model: cannot open '" + path + "'");

  std::string magic(kMagic.size(), '\0');
  is.read(magic.data(), static_cast<std::streamsize>(magic.size()));
  if (!is || magic != kMagic) throw ConfigError("load_model: not a model file (bad magic)");
  const std::uint64_t hlen = get_u64(is);
  std::string hjson(hlen, '\0');
  is.read(hjson.data(), static_cast<std::streamsize>(hlen));
  if (!is) throw ConfigError("load_model: truncated header");

  nlohmann::json hdr = nlohmann::json::parse(hjson, nullptr, false);
  if (hdr.is_discarded()) throw ConfigError("load_model: malformed header");

  if (hdr.at("problem").get<std::string>() != p.id)
    throw ConfigError("load_model: model was trained for problem '" +
                      hdr.at("problem").get<std::string>() + "', not '" + p.id + "'");
  if (hdr.at("mesh_hash").get<std::uint64_t>() != mesh_hash(p.mesh))
    throw ConfigError("load_model: mesh mismatch (different resolution or geometry)");
  if (hdr.at("n_free").get<int>() != p.fe.n_free())
    throw ConfigError("load_model: dof count mismatch");

  ReducedModel model;
  model.prob = &p;
  model.unsteady = hdr.at("mode").get<std::string>() == "unsteady";
  model.bound_case = bound_case_from_string(hdr.at("bound_case").get<std::string>());
  model.cols_after_snapshot = hdr.at("cols_after_snapshot").get<std::vector<int>>();
  model.part_q.load_ids = hdr.at("part_q").at("load_ids").get<std::vector<int>>();
  model.part_q.op_ids = hdr.at("part_q").at("op_ids").get<std::vector<int>>();
  model.part_z.load_ids = hdr.at("part_z").at("load_ids").get<std::vector<int>>();
  model.part_z.op_ids = hdr.at("part_z").at("op_ids").get<std::vector<int>>();
  model.frozen = true;

  std::vector<double> scalars = get_doubles(is);
  if (scalars.size() != 3) throw ConfigError("load_model: bad scalar section");
  model.alpha = scalars[0];
  model.grid = TimeGrid{scalars[1], hdr.at("n_t").get<int>()};

  std::vector<double> mus = get_doubles(is);
  if (mus.size() % 3 != 0) throw ConfigError("load_model: bad parameter section");
  for (std::size_t i = 0; i < mus.size(); i += 3)
    model.sampled.push_back(Mu(mus[i], mus[i + 1], mus[i + 2]));

  model.Z = get_mat(is);
  const std::uint64_t n_ops = get_u64(is);
  for (std::uint64_t i = 0; i < n_ops; ++i) model.op_red.push_back(get_mat(is));
  const std::uint64_t n_loads = get_u64(is);
  for (std::uint64_t i = 0; i < n_loads; ++i) {
    std::vector<double> v = get_doubles(is);
    model.load_red.push_back(Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size())));
  }
  model.part_q.rfac = get_mat(is);
  model.part_z.rfac = get_mat(is);

  model.disc = std::make_shared<DiscreteOcp>(
      make_discrete(p, model.unsteady ? &model.grid : nullptr));
  const DiscreteOcp& d = *model.disc;
  if (model.Z.rows() != d.n_st() || model.op_red.size() != d.ops.size() ||
      model.load_red.size() != d.loads.size())
    throw ConfigError("load_model: payload inconsistent with the discrete skeleton");
  if (static_cast<int>(hdr.at("n_cols").get<int>()) != model.n_cols())
    throw ConfigError("load_model: basis width mismatch");
  return model;
}

}  // namespace strb
