// Copyright 2026 The PVSID Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "pvsid/model_io.h"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace pvsid {
namespace {

using nlohmann::json;

json VectorToJson(const VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

VectorXd JsonToVector(const json& j, Index expected, const char* what) {
  std::vector<double> values = j.get<std::vector<double>>();
  if (expected >= 0 && static_cast<Index>(values.size()) != expected) {
    throw InvalidArgument(std::string("model file: ") + what + " has wrong length");
  }
  return Eigen::Map<VectorXd>(values.data(), static_cast<Index>(values.size()));
}

json StatsToJson(const ChannelStats& s) {
  return {{"mean", VectorToJson(s.mean)}, {"std", VectorToJson(s.std)}};
}

ChannelStats JsonToStats(const json& j, Index channels, const char* what) {
  ChannelStats s;
  s.mean = JsonToVector(j.at("mean"), channels, what);
  s.std = JsonToVector(j.at("std"), channels, what);
  if ((s.std.array() <= 0.0).any()) {
    throw InvalidArgument(std::string("model file: ") + what + " std must be > 0");
  }
  return s;
}

json NetToJson(const Mlpd& net) {
  json layers = json::array();
  for (int l = 0; l < net.num_layers(); ++l) {
    const auto w = net.weight(l);
    std::vector<double> weight(w.data(), w.data() + w.size());  // row-major
    const auto b = net.bias(l);
    layers.push_back({{"weight_shape", {w.rows(), w.cols()}},
                      {"weight", weight},
                      {"bias", std::vector<double>(b.data(), b.data() + b.size())}});
  }
  return {{"layer_dims", net.layer_dims()}, {"layers", layers}};
}

Mlpd JsonToNet(const json& j) {
  Mlpd net(j.at("layer_dims").get<std::vector<int>>());
  const json& layers = j.at("layers");
  if (!layers.is_array() || static_cast<int>(layers.size()) != net.num_layers()) {
    throw InvalidArgument("model file: layer count does not match layer_dims");
  }
  for (int l = 0; l < net.num_layers(); ++l) {
    const json& layer = layers[static_cast<size_t>(l)];
    const auto shape = layer.at("weight_shape").get<std::vector<Index>>();
    auto w = net.weight(l);
    if (shape.size() != 2 || shape[0] != w.rows() || shape[1] != w.cols()) {
      throw InvalidArgument("model file: weight shape inconsistent with layer_dims");
    }
    const VectorXd weight = JsonToVector(layer.at("weight"), w.size(), "weight");
    std::copy(weight.data(), weight.data() + weight.size(), w.data());
    net.bias(l) = JsonToVector(layer.at("bias"), w.rows(), "bias");
  }
  return net;
}

json Payload(const PvsidModel& m) {
  return {{"h_p", m.h_p},
          {"h_f", m.h_f},
          {"n_u", m.n_u},
          {"n_y", m.n_y},
          {"n_w", m.n_w},
          {"n_xhat", m.n_xhat},
          {"gamma", m.gamma},
          {"layout", "time-major"},
          {"y_channels", m.y_channels},
          {"norm",
           {{"u", StatsToJson(m.stats.u)},
            {"y", StatsToJson(m.stats.y)},
            {"w", StatsToJson(m.stats.w)}}},
          {"estimator", NetToJson(m.estimator)},
          {"predictor", NetToJson(m.predictor)},
          {"train_fingerprint", m.train_fingerprint}};
}

}  // namespace

std::string SerializeModel(const PvsidModel& model) {
  model.Validate();
  json payload = Payload(model);
  json doc = {{"format", "pvsid-model"},
              {"version", kModelFormatVersion},
              {"checksum", ToHex(Fnv1a64(payload.dump()))},
              {"payload", payload}};
  return doc.dump(1) + "\n";
}

PvsidModel DeserializeModel(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("model file: parse error: ") + e.what());
  }
  try {
    if (doc.at("format").get<std::string>() != "pvsid-model") {
      throw InvalidArgument("model file: not a pvsid model");
    }
    const int version = doc.at("version").get<int>();
    if (version != kModelFormatVersion) {
      throw InvalidArgument("model file: version " + std::to_string(version) +
                            " not supported (expected " +
                            std::to_string(kModelFormatVersion) + ")");
    }
    const json& p = doc.at("payload");
    if (doc.at("checksum").get<std::string>() != ToHex(Fnv1a64(p.dump()))) {
      throw InvalidArgument("model file: checksum mismatch");
    }
    if (p.at("layout").get<std::string>() != "time-major") {
      throw InvalidArgument("model file: unknown layout");
    }
    PvsidModel m;
    m.h_p = p.at("h_p").get<int>();
    m.h_f = p.at("h_f").get<int>();
    m.n_u = p.at("n_u").get<int>();
    m.n_y = p.at("n_y").get<int>();
    m.n_w = p.at("n_w").get<int>();
    m.n_xhat = p.at("n_xhat").get<int>();
    m.gamma = p.at("gamma").get<double>();
    m.y_channels = p.at("y_channels").get<std::vector<int>>();
    const json& norm = p.at("norm");
    m.stats.u = JsonToStats(norm.at("u"), m.n_u, "norm.u");
    m.stats.y = JsonToStats(norm.at("y"), m.n_y, "norm.y");
    m.stats.w = JsonToStats(norm.at("w"), m.n_w, "norm.w");
    m.estimator = JsonToNet(p.at("estimator"));
    m.predictor = JsonToNet(p.at("predictor"));
    m.train_fingerprint = p.at("train_fingerprint").get<std::string>();
    m.Validate();
    return m;
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("model file: ") + e.what());
  }
}

void SaveModel(const std::string& path, const PvsidModel& model) {
  const std::string text = SerializeModel(model);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write model file " + path);
  out << text;
}

PvsidModel LoadModel(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open model file " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return DeserializeModel(buffer.str());
}

}  // namespace pvsid
