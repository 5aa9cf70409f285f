#include "swasat/service.hpp"

#include <cmath>
#include <fstream>
#include <regex>

#include <httplib.h>
#include <torch/torch.h>

#include "swasat/checkpoint.hpp"
#include "swasat/editing.hpp"
#include "swasat/errors.hpp"
#include "swasat/image_io.hpp"

namespace fs = std::filesystem;

namespace swasat::service {
namespace {

Response json_response(int status, const nlohmann::json& body) { return {status, body.dump(), "application/json"}; }

Response error_response(int status, const std::string& code, const std::string& message) {
  return json_response(status, {{"error", {{"code", code}, {"message", message}}}});
}

// Request validation failures map to 400.
struct BadRequest : std::runtime_error {
  using std::runtime_error::runtime_error;
};

const nlohmann::json& field(const nlohmann::json& request, const char* name) {
  if (!request.contains(name)) {
    throw BadRequest(std::string("missing field '") + name + "'");
  }
  return request.at(name);
}

std::uint64_t as_seed(const nlohmann::json& v) {
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
    throw BadRequest("seed must be a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

double as_finite(const nlohmann::json& v, const char* name) {
  if (!v.is_number()) {
    throw BadRequest(std::string(name) + " must be a number");
  }
  const auto x = v.get<double>();
  if (!std::isfinite(x)) {
    throw BadRequest(std::string(name) + " must be finite");
  }
  return x;
}

std::int64_t as_index(const nlohmann::json& v) {
  if (!v.is_number_integer()) {
    throw BadRequest("direction_index must be an integer");
  }
  return v.get<std::int64_t>();
}

std::string latent_id(std::uint64_t seed) { return "seed:" + std::to_string(seed); }

std::uint64_t seed_from_request(const nlohmann::json& request) {
  if (request.contains("seed")) {
    return as_seed(request["seed"]);
  }
  if (request.contains("latent_id")) {
    const auto& id = request["latent_id"];
    static const std::regex pattern("^seed:([0-9]{1,20})$");
    std::smatch m;
    const auto text = id.is_string() ? id.get<std::string>() : std::string();
    if (!std::regex_match(text, m, pattern)) {
      throw BadRequest("latent_id is not recognized");
    }
    try {
      return std::stoull(m[1].str());
    } catch (const std::exception&) {
      throw BadRequest("latent_id is not recognized");
    }
  }
  throw BadRequest("missing field 'seed' or 'latent_id'");
}

}  // namespace

LabelStore::LabelStore(fs::path path) : path_(std::move(path)) {}

fs::path LabelStore::beside(const fs::path& directions_file) {
  auto p = directions_file;
  p.replace_extension(".labels.json");
  return p;
}

std::map<std::int64_t, Label> LabelStore::read_locked() const {
  std::map<std::int64_t, Label> out;
  std::ifstream in(path_);
  if (!in) {
    return out;
  }
  try {
    const auto doc = nlohmann::json::parse(in);
    for (const auto& [key, value] : doc.at("labels").items()) {
      out[std::stoll(key)] = Label{value.value("positive", ""), value.value("negative", "")};
    }
  } catch (const std::exception& e) {
    throw IoError("label store " + path_.string() + " is unreadable: " + e.what());
  }
  return out;
}

std::map<std::int64_t, Label> LabelStore::all() const {
  std::lock_guard lock(mutex_);
  return read_locked();
}

void LabelStore::put(std::int64_t index, const Label& label) {
  std::lock_guard lock(mutex_);
  auto labels = read_locked();
  labels[index] = label;
  nlohmann::json doc{{"format_version", 1}, {"labels", nlohmann::json::object()}};
  for (const auto& [i, l] : labels) {
    doc["labels"][std::to_string(i)] = {{"positive", l.positive}, {"negative", l.negative}};
  }
  if (path_.has_parent_path()) {
    fs::create_directories(path_.parent_path());
  }
  const auto tmp = fs::path(path_.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << doc.dump(2) << '\n';
    if (!out.flush()) {
      throw IoError("cannot write label store " + path_.string());
    }
  }
  fs::rename(tmp, path_);
}

Service::Service(fs::path checkpoint_file, fs::path directions_file, ServiceOptions options)
    : labels_(LabelStore::beside(directions_file)), options_(options) {
  const auto checkpoint = load_checkpoint(checkpoint_file);
  checkpoint_hash_ = swasat::checkpoint_hash(checkpoint);
  generator_ = load_generator(checkpoint);
  directions_ = sefa::load_directions(directions_file);
  if (!directions_.checkpoint_hash.empty() && directions_.checkpoint_hash != checkpoint_hash_) {
    throw DataError("directions file was computed from a different checkpoint");
  }
  directions_hash_ = editing::directions_hash(directions_);
}

Service::~Service() { stop(); }

double Service::psi_of(const nlohmann::json& request) const {
  if (!request.contains("psi")) {
    return options_.default_psi;
  }
  const auto psi = as_finite(request["psi"], "psi");
  if (psi < 0.0 || psi > 1.0) {
    throw BadRequest("psi must lie in [0, 1]");
  }
  return psi;
}

Response Service::handle(const std::string& method, const std::string& path, const std::string& body,
                         const std::string& pinned_hash) {
  ++requests_;
  try {
    nlohmann::json request = nlohmann::json::object();
    if (!body.empty()) {
      try {
        request = nlohmann::json::parse(body);
      } catch (const nlohmann::json::exception&) {
        return error_response(400, "E_BAD_REQUEST", "body is not valid JSON");
      }
      if (!request.is_object()) {
        return error_response(400, "E_BAD_REQUEST", "body must be a JSON object");
      }
    }
    auto pin = pinned_hash;
    if (pin.empty() && request.contains("checkpoint_hash") && request["checkpoint_hash"].is_string()) {
      pin = request["checkpoint_hash"].get<std::string>();
    }
    if (!pin.empty() && pin != checkpoint_hash_) {
      return error_response(409, "E_STALE_CHECKPOINT", "pinned checkpoint hash does not match the served model");
    }

    if (method == "GET" && path == "/health") {
      return json_response(200, {{"status", "ok"}, {"checkpoint_hash", checkpoint_hash_}});
    }
    if (method == "GET" && path == "/meta") {
      return meta();
    }
    if (method == "GET" && path == "/directions") {
      return directions();
    }
    static const std::regex label_path("^/directions/(-?[0-9]{1,18})/label$");
    std::smatch m;
    if (method == "PUT" && std::regex_match(path, m, label_path)) {
      return put_label(std::stoll(m[1].str()), request);
    }
    if (method == "POST" && (path == "/generate" || path == "/edit" || path == "/grid")) {
      // canonical key: nlohmann objects serialize with sorted keys
      auto canonical = request;
      canonical.erase("checkpoint_hash");
      const auto key = path + "\n" + canonical.dump() + "\n" + checkpoint_hash_;
      {
        std::lock_guard lock(cache_mutex_);
        const auto it = cache_.find(key);
        if (it != cache_.end()) {
          ++cache_hits_;
          return it->second;
        }
      }
      Response r;
      {
        std::lock_guard lock(model_mutex_);
        r = path == "/generate" ? generate(request) : path == "/edit" ? edit(request) : grid(request);
      }
      if (r.status == 200) {
        std::lock_guard lock(cache_mutex_);
        if (cache_.size() >= options_.cache_entries) {
          cache_.clear();
        }
        cache_.emplace(key, r);
      }
      return r;
    }
    return error_response(404, "E_NOT_FOUND", "no route for " + method + " " + path);
  } catch (const BadRequest& e) {
    return error_response(400, "E_BAD_REQUEST", e.what());
  } catch (const NotFoundError& e) {
    return error_response(404, e.code(), e.what());
  } catch (const ConfigError& e) {
    return error_response(400, e.code(), e.what());
  } catch (const std::exception&) {
    return error_response(500, "E_INTERNAL", "internal error");
  }
}

Response Service::meta() {
  auto labels = nlohmann::json::array();
  const auto stored = labels_.all();
  for (const auto& d : directions_.directions) {
    const auto it = stored.find(d.index);
    const Label l = it != stored.end() ? it->second : Label{d.positive_label, d.negative_label};
    labels.push_back({{"index", d.index}, {"positive", l.positive}, {"negative", l.negative}});
  }
  return json_response(200, {{"checkpoint_hash", checkpoint_hash_},
                             {"directions_hash", directions_hash_},
                             {"resolution", generator_->config().output_resolution},
                             {"w_dim", directions_.w_dim},
                             {"k", directions_.size()},
                             {"layer_selection", directions_.selection.to_string()},
                             {"default_psi", options_.default_psi},
                             {"labels", labels}});
}

Response Service::directions() {
  auto list = nlohmann::json::array();
  const auto stored = labels_.all();
  for (const auto& d : directions_.directions) {
    const auto it = stored.find(d.index);
    const Label l = it != stored.end() ? it->second : Label{d.positive_label, d.negative_label};
    list.push_back({{"index", d.index}, {"eigenvalue", d.eigenvalue}, {"label", {{"positive", l.positive}, {"negative", l.negative}}}});
  }
  return json_response(200, {{"checkpoint_hash", checkpoint_hash_}, {"directions", list}});
}

Response Service::generate(const nlohmann::json& request) {
  const auto seed = as_seed(field(request, "seed"));
  const auto psi = psi_of(request);
  TruncationConfig trunc;
  trunc.psi = psi;
  trunc.w_mean = generator_->w_mean;
  const auto img = render(generator_, mapped_latent(generator_, seed, trunc));
  return json_response(200, {{"checkpoint_hash", checkpoint_hash_},
                             {"seed", seed},
                             {"psi", psi},
                             {"latent_id", latent_id(seed)},
                             {"image", image::base64_encode(image::encode_png(img))}});
}

Response Service::edit(const nlohmann::json& request) {
  const auto seed = seed_from_request(request);
  const auto index = as_index(field(request, "direction_index"));
  const auto alpha = as_finite(field(request, "alpha"), "alpha");
  const auto psi = psi_of(request);
  directions_.at(index);
  TruncationConfig trunc;
  trunc.psi = psi;
  trunc.w_mean = generator_->w_mean;
  const auto base = mapped_latent(generator_, seed, trunc);
  const auto img = render(generator_, editing::edit_latent(base, directions_, index, alpha));
  return json_response(200, {{"checkpoint_hash", checkpoint_hash_},
                             {"seed", seed},
                             {"latent_id", latent_id(seed)},
                             {"direction_index", index},
                             {"alpha", alpha},
                             {"psi", psi},
                             {"image", image::base64_encode(image::encode_png(img))}});
}

Response Service::grid(const nlohmann::json& request) {
  const auto& seeds_json = field(request, "seeds");
  const auto& alphas_json = field(request, "alphas");
  if (!seeds_json.is_array() || seeds_json.empty() || !alphas_json.is_array() || alphas_json.empty()) {
    throw BadRequest("seeds and alphas must be non-empty arrays");
  }
  std::vector<std::uint64_t> seeds;
  for (const auto& s : seeds_json) seeds.push_back(as_seed(s));
  std::vector<double> alphas;
  for (const auto& a : alphas_json) alphas.push_back(as_finite(a, "alpha"));
  if (static_cast<std::int64_t>(seeds.size() * alphas.size()) > options_.max_grid_cells) {
    throw BadRequest("grid exceeds " + std::to_string(options_.max_grid_cells) + " cells");
  }
  const auto index = as_index(field(request, "direction_index"));
  const auto psi = psi_of(request);
  const auto g = editing::edit_grid(generator_, seeds, directions_, index, alphas, psi);
  auto manifest = g.manifest();
  manifest["checkpoint_hash"] = checkpoint_hash_;
  return json_response(200, {{"checkpoint_hash", checkpoint_hash_},
                             {"rows", g.rows},
                             {"cols", g.cols},
                             {"image", image::base64_encode(image::encode_png(g.tiled()))},
                             {"manifest", manifest}});
}

Response Service::put_label(std::int64_t index, const nlohmann::json& request) {
  directions_.at(index);
  const auto text = [&](const char* name) -> std::string {
    if (!request.contains(name)) return "";
    if (!request[name].is_string()) throw BadRequest(std::string(name) + " must be a string");
    return request[name].get<std::string>();
  };
  const Label label{text("positive_text"), text("negative_text")};
  labels_.put(index, label);
  return json_response(200, {{"checkpoint_hash", checkpoint_hash_},
                             {"index", index},
                             {"label", {{"positive", label.positive}, {"negative", label.negative}}}});
}

void Service::serve(const std::string& host, int port, const std::function<void(int)>& on_listen) {
  {
    std::lock_guard lock(server_mutex_);
    server_ = std::make_unique<httplib::Server>();
  }
  auto& srv = *server_;
  const auto dispatch = [this](const httplib::Request& req, httplib::Response& res) {
    const auto r = handle(req.method, req.path, req.body, req.get_header_value("X-Checkpoint-Hash"));
    res.status = r.status;
    res.set_content(r.body, r.content_type);
  };
  srv.Get(".*", dispatch);
  srv.Post(".*", dispatch);
  srv.Put(".*", dispatch);
  int bound = port;
  if (port == 0) {
    bound = srv.bind_to_any_port(host);
  } else if (!srv.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) {
    throw IoError("cannot bind " + host + ":" + std::to_string(port));
  }
  if (on_listen) {
    on_listen(bound);
  }
  srv.listen_after_bind();
}

void Service::stop() {
  std::lock_guard lock(server_mutex_);
  if (server_) {
    server_->stop();
  }
}

}  // namespace swasat::service
