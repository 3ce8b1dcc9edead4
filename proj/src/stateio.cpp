#include "mcslab/stateio.hpp"

#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

#include "mcslab/errors.hpp"

namespace mcs {

void write_text_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw ConfigInvalid("cannot open " + tmp + " for writing");
    f << content;
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw ConfigInvalid("cannot rename " + tmp + " to " + path);
}

void save_state(const McsState& st, const TorusLattice& lat, const std::string& path) {
  nlohmann::json head;
  head["a1"] = {lat.a1.x, lat.a1.y};
  head["a2"] = {lat.a2.x, lat.a2.y};
  head["n"] = st.v.n;
  head["lambda"] = st.lambda;
  head["mu"] = st.mu;
  head["residual_norm"] = st.residual_norm;
  head["newton_iters"] = st.newton_iters;
  head["mass"] = st.mass;
  head["max_u"] = st.max_u;
  nlohmann::json pts = nlohmann::json::array(), ms = nlohmann::json::array();
  for (std::size_t i = 0; i < st.vortices.size(); ++i) {
    pts.push_back({st.vortices.points[i].x, st.vortices.points[i].y});
    ms.push_back(st.vortices.multiplicities[i]);
  }
  head["vortex_points"] = pts;
  head["vortex_multiplicities"] = ms;

  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw ConfigInvalid("cannot open " + tmp + " for writing");
    f << head.dump() << "\n";
    f.write(reinterpret_cast<const char*>(st.v.v.data()),
            (std::streamsize)(st.v.v.size() * sizeof(double)));
    f.write(reinterpret_cast<const char*>(st.N.v.data()),
            (std::streamsize)(st.N.v.size() * sizeof(double)));
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw ConfigInvalid("cannot rename " + tmp + " to " + path);
}

LoadedState load_state(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigInvalid("cannot open state file " + path);
  std::string line;
  std::getline(f, line);
  nlohmann::json head;
  try {
    head = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigInvalid("bad state header: " + std::string(e.what()));
  }
  LoadedState out;
  out.lat.a1 = {head.at("a1")[0].get<double>(), head.at("a1")[1].get<double>()};
  out.lat.a2 = {head.at("a2")[0].get<double>(), head.at("a2")[1].get<double>()};
  const int n = head.at("n").get<int>();
  out.state.lambda = head.at("lambda").get<double>();
  out.state.mu = head.at("mu").get<double>();
  out.state.residual_norm = head.value("residual_norm", 0.0);
  out.state.newton_iters = head.value("newton_iters", 0);
  out.state.mass = head.value("mass", 0.0);
  out.state.max_u = head.value("max_u", 0.0);
  for (std::size_t i = 0; i < head.at("vortex_points").size(); ++i) {
    out.state.vortices.points.push_back({head["vortex_points"][i][0].get<double>(),
                                         head["vortex_points"][i][1].get<double>()});
    out.state.vortices.multiplicities.push_back(head["vortex_multiplicities"][i].get<int>());
  }
  out.state.v = Field(out.lat, n);
  out.state.N = Field(out.lat, n);
  f.read(reinterpret_cast<char*>(out.state.v.v.data()),
         (std::streamsize)(out.state.v.v.size() * sizeof(double)));
  f.read(reinterpret_cast<char*>(out.state.N.v.data()),
         (std::streamsize)(out.state.N.v.size() * sizeof(double)));
  if (!f) throw ConfigInvalid("truncated state file " + path);
  return out;
}

}  // namespace mcs
