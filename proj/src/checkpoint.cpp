#include "velgan/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>

#include <json.hpp>

namespace velgan {

using json = nlohmann::json;
using nn::Tensor;

namespace {

constexpr const char* kMagic = "VGCKPT1";

void append_f32_le(std::string& blob, const Tensor<float>& t) {
  for (float f : t.v) {
    const uint32_t u = std::bit_cast<uint32_t>(f);
    blob.push_back(static_cast<char>(u & 0xff));
    blob.push_back(static_cast<char>((u >> 8) & 0xff));
    blob.push_back(static_cast<char>((u >> 16) & 0xff));
    blob.push_back(static_cast<char>((u >> 24) & 0xff));
  }
}

void read_f32_le(const std::string& blob, size_t offset, Tensor<float>& t) {
  if (offset + 4 * t.size() > blob.size())
    throw std::runtime_error("checkpoint: tensor data out of bounds");
  const unsigned char* p =
      reinterpret_cast<const unsigned char*>(blob.data()) + offset;
  for (size_t i = 0; i < t.size(); ++i, p += 4) {
    const uint32_t u = static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
                       (static_cast<uint32_t>(p[2]) << 16) |
                       (static_cast<uint32_t>(p[3]) << 24);
    t.v[i] = std::bit_cast<float>(u);
  }
}

json stats_to_json(const FrozenStats& s) {
  json j;
  for (int i = 0; i < 4; ++i) {
    const std::string r = role_name(static_cast<Role>(i));
    j["clip"][r] = {{"mu", s.clip[i].mu}, {"sigma", s.clip[i].sigma}};
    j["norm"][r] = {{"min", s.norm[i].x_min}, {"max", s.norm[i].x_max}};
  }
  j["crop_top"] = s.crop_top;
  j["boundary_index"] = s.boundary_index;
  j["train_fraction"] = s.train_fraction;
  j["patch_size"] = s.patch_size;
  j["input_channels"] = s.input_channels;
  return j;
}

FrozenStats stats_from_json(const json& j) {
  FrozenStats s;
  for (int i = 0; i < 4; ++i) {
    const std::string r = role_name(static_cast<Role>(i));
    s.clip[i].mu = j.at("clip").at(r).at("mu").get<double>();
    s.clip[i].sigma = j.at("clip").at(r).at("sigma").get<double>();
    s.norm[i].x_min = j.at("norm").at(r).at("min").get<double>();
    s.norm[i].x_max = j.at("norm").at(r).at("max").get<double>();
  }
  s.crop_top = j.at("crop_top").get<int>();
  s.boundary_index = j.at("boundary_index").get<int>();
  s.train_fraction = j.at("train_fraction").get<double>();
  s.patch_size = j.at("patch_size").get<int>();
  s.input_channels = j.at("input_channels").get<int>();
  return s;
}

struct NamedTensor {
  std::string name;
  Tensor<float>* t;
};

std::vector<NamedTensor> all_tensors(TrainState& st) {
  std::vector<NamedTensor> out;
  auto gp = st.G.params();
  auto dp = st.D.params();
  for (auto& p : gp) out.push_back({"g." + p.name, p.value});
  for (auto& p : dp) out.push_back({"d." + p.name, p.value});
  for (size_t i = 0; i < gp.size(); ++i) {
    out.push_back({"adam.g.m." + gp[i].name, &st.opt_g.moment_m(i)});
    out.push_back({"adam.g.v." + gp[i].name, &st.opt_g.moment_v(i)});
  }
  for (size_t i = 0; i < dp.size(); ++i) {
    out.push_back({"adam.d.m." + dp[i].name, &st.opt_d.moment_m(i)});
    out.push_back({"adam.d.v." + dp[i].name, &st.opt_d.moment_v(i)});
  }
  return out;
}

}  // namespace

void save_checkpoint(TrainState& state, const std::string& path) {
  json header;
  header["format"] = kMagic;
  header["epoch"] = state.epoch;
  header["total_steps"] = state.total_steps;
  header["seed"] = state.seed;
  header["adam_t_g"] = state.opt_g.step_count();
  header["adam_t_d"] = state.opt_d.step_count();

  header["generator"] = {
      {"in_channels", state.gspec.in_channels},
      {"out_channels", state.gspec.out_channels},
      {"base_width", state.gspec.base_width},
      {"patch_size", state.gspec.patch_size},
      {"dropout_rate", state.gspec.dropout_rate},
      {"noise_mode",
       state.gspec.noise_mode == nn::NoiseMode::dropout ? "dropout" : "none"},
      {"init", "gaussian(0, 0.02)"},
      {"batchnorm", "batch statistics in all modes"},
  };
  header["discriminator"] = {
      {"in_channels", state.dspec.in_channels},
      {"base_width", state.dspec.base_width},
      {"leaky_slope", state.dspec.leaky_slope},
  };
  header["loss"] = {
      {"lambda_l1", state.loss_cfg.lambda_l1},
      {"adversarial_form",
       state.loss_cfg.adversarial_form == nn::AdversarialForm::non_saturating
           ? "non_saturating"
           : "minimax"},
  };
  header["optim"] = {
      {"lr", state.optim_cfg.lr},           {"beta1", state.optim_cfg.beta1},
      {"beta2", state.optim_cfg.beta2},     {"epsilon", state.optim_cfg.epsilon},
      {"batch_size", state.optim_cfg.batch_size},
  };
  header["prep"] = stats_to_json(state.stats);
  header["loss_history"] = state.loss_history;

  std::string blob;
  json tensors = json::array();
  for (const NamedTensor& nt : all_tensors(state)) {
    tensors.push_back({{"name", nt.name},
                       {"shape", {nt.t->n, nt.t->c, nt.t->h, nt.t->w}},
                       {"offset", blob.size()},
                       {"dtype", "f32le"}});
    append_f32_le(blob, *nt.t);
  }
  header["tensors"] = tensors;

  const std::string htext = header.dump();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("checkpoint: cannot write '" + path + "'");
  out << kMagic << "\n" << htext.size() << "\n" << htext << blob;
  if (!out) throw std::runtime_error("checkpoint: write failed for '" + path + "'");
}

TrainState load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open '" + path + "'");
  std::string magic, len_line;
  if (!std::getline(in, magic) || magic != kMagic)
    throw std::runtime_error("checkpoint: bad magic in '" + path + "'");
  if (!std::getline(in, len_line))
    throw std::runtime_error("checkpoint: missing header length");
  const size_t hlen = std::stoull(len_line);
  std::string htext(hlen, '\0');
  in.read(htext.data(), static_cast<std::streamsize>(hlen));
  if (!in) throw std::runtime_error("checkpoint: truncated header");
  std::string blob{std::istreambuf_iterator<char>(in),
                   std::istreambuf_iterator<char>()};

  const json header = json::parse(htext);

  nn::GeneratorSpec gspec;
  const json& jg = header.at("generator");
  gspec.in_channels = jg.at("in_channels").get<int>();
  gspec.out_channels = jg.at("out_channels").get<int>();
  gspec.base_width = jg.at("base_width").get<int>();
  gspec.patch_size = jg.at("patch_size").get<int>();
  gspec.dropout_rate = jg.at("dropout_rate").get<double>();
  gspec.noise_mode = jg.at("noise_mode").get<std::string>() == "dropout"
                         ? nn::NoiseMode::dropout
                         : nn::NoiseMode::none;

  nn::DiscriminatorSpec dspec;
  const json& jd = header.at("discriminator");
  dspec.in_channels = jd.at("in_channels").get<int>();
  dspec.base_width = jd.at("base_width").get<int>();
  dspec.leaky_slope = jd.at("leaky_slope").get<double>();

  nn::LossConfig loss;
  loss.lambda_l1 = header.at("loss").at("lambda_l1").get<double>();
  loss.adversarial_form =
      header.at("loss").at("adversarial_form").get<std::string>() == "minimax"
          ? nn::AdversarialForm::minimax
          : nn::AdversarialForm::non_saturating;

  nn::OptimConfig optim;
  const json& jo = header.at("optim");
  optim.lr = jo.at("lr").get<double>();
  optim.beta1 = jo.at("beta1").get<double>();
  optim.beta2 = jo.at("beta2").get<double>();
  optim.epsilon = jo.at("epsilon").get<double>();
  optim.batch_size = jo.at("batch_size").get<int>();

  TrainState state(gspec, dspec, loss, optim, header.at("seed").get<uint64_t>());
  state.epoch = header.at("epoch").get<int>();
  state.total_steps = header.at("total_steps").get<int64_t>();
  state.opt_g.set_step_count(header.at("adam_t_g").get<int64_t>());
  state.opt_d.set_step_count(header.at("adam_t_d").get<int64_t>());
  state.stats = stats_from_json(header.at("prep"));
  for (const auto& row : header.at("loss_history"))
    state.loss_history.push_back(
        {row[0].get<double>(), row[1].get<double>(), row[2].get<double>(),
         row[3].get<double>()});

  std::map<std::string, std::pair<size_t, std::array<int, 4>>> index;
  for (const auto& jt : header.at("tensors"))
    index[jt.at("name").get<std::string>()] = {
        jt.at("offset").get<size_t>(),
        {jt.at("shape")[0].get<int>(), jt.at("shape")[1].get<int>(),
         jt.at("shape")[2].get<int>(), jt.at("shape")[3].get<int>()}};

  const auto fill = [&](const std::string& name, Tensor<float>& t) {
    auto it = index.find(name);
    if (it == index.end())
      throw std::runtime_error("checkpoint: missing tensor '" + name + "'");
    const auto& [off, shape] = it->second;
    if (shape[0] != t.n || shape[1] != t.c || shape[2] != t.h || shape[3] != t.w)
      throw std::runtime_error("checkpoint: shape mismatch for '" + name + "'");
    read_f32_le(blob, off, t);
  };
  for (const NamedTensor& nt : all_tensors(state)) fill(nt.name, *nt.t);
  return state;
}

}  // namespace velgan
