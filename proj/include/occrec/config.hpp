#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace occrec {

struct PipelineConfig {
    int m = 6;    // parts: 4 horizontal + 2 vertical
    int d = 256;  // per-part feature dimension
    int k_train = 30;
    int k_infer = 10;
    double theta_train = 0.7;
    double theta_infer = 0.7;
    int t = 2;  // GNN layers
    double eta = 0.3;
    double learning_rate = 3.5e-4;
    std::vector<int> lr_decay_epochs = {40, 70};
    int epochs = 120;
    int batch_persons = 16;     // GNN batch: persons per batch
    int sets_per_person = 4;    // GNN batch: neighbour sets per person
    int enc_batch_persons = 8;  // encoder batch: persons per batch
    int enc_images_per_person = 4;
    std::uint64_t seed = 1;
    int threads = 1;
    bool reconstruct_gallery = true;
    bool filter_same_camera = false;

    void validate() const {
        if (m < 1) throw std::runtime_error("config: m must be >= 1");
        if (d < 1) throw std::runtime_error("config: d must be >= 1");
        if (k_train < 1 || k_infer < 1) throw std::runtime_error("config: K must be >= 1");
        if (theta_train < -1.0 || theta_train > 1.0 || theta_infer < -1.0 || theta_infer > 1.0)
            throw std::runtime_error("config: theta must lie in [-1, 1]");
        if (t < 1) throw std::runtime_error("config: t (GNN layers) must be >= 1");
        if (eta <= 0.0) throw std::runtime_error("config: eta must be > 0");
        if (epochs < 0) throw std::runtime_error("config: epochs must be >= 0");
        if (threads < 1) throw std::runtime_error("config: threads must be >= 1");
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["m"] = m;
        j["d"] = d;
        j["k_train"] = k_train;
        j["k_infer"] = k_infer;
        j["theta_train"] = theta_train;
        j["theta_infer"] = theta_infer;
        j["t"] = t;
        j["eta"] = eta;
        j["learning_rate"] = learning_rate;
        j["lr_decay_epochs"] = lr_decay_epochs;
        j["epochs"] = epochs;
        j["batch_persons"] = batch_persons;
        j["sets_per_person"] = sets_per_person;
        j["enc_batch_persons"] = enc_batch_persons;
        j["enc_images_per_person"] = enc_images_per_person;
        j["seed"] = seed;
        j["threads"] = threads;
        j["reconstruct_gallery"] = reconstruct_gallery;
        j["filter_same_camera"] = filter_same_camera;
        return j;
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        tok = trim(tok);
        if (!tok.empty()) out.push_back(std::stoi(tok));
    }
    return out;
}

}  // namespace detail

// Flat key=value file; '#' starts a comment. Keys mirror PipelineConfig fields.
inline void apply_config_line(PipelineConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "m") cfg.m = std::stoi(value);
    else if (key == "d") cfg.d = std::stoi(value);
    else if (key == "k_train") cfg.k_train = std::stoi(value);
    else if (key == "k_infer") cfg.k_infer = std::stoi(value);
    else if (key == "theta_train") cfg.theta_train = std::stod(value);
    else if (key == "theta_infer") cfg.theta_infer = std::stod(value);
    else if (key == "t") cfg.t = std::stoi(value);
    else if (key == "eta") cfg.eta = std::stod(value);
    else if (key == "learning_rate") cfg.learning_rate = std::stod(value);
    else if (key == "lr_decay_epochs") cfg.lr_decay_epochs = detail::parse_int_list(value);
    else if (key == "epochs") cfg.epochs = std::stoi(value);
    else if (key == "batch_persons") cfg.batch_persons = std::stoi(value);
    else if (key == "sets_per_person") cfg.sets_per_person = std::stoi(value);
    else if (key == "enc_batch_persons") cfg.enc_batch_persons = std::stoi(value);
    else if (key == "enc_images_per_person") cfg.enc_images_per_person = std::stoi(value);
    else if (key == "seed") cfg.seed = std::stoull(value);
    else if (key == "threads") cfg.threads = std::stoi(value);
    else if (key == "reconstruct_gallery") cfg.reconstruct_gallery = (value == "1" || value == "true");
    else if (key == "filter_same_camera") cfg.filter_same_camera = (value == "1" || value == "true");
    else throw std::runtime_error("config: unknown key '" + key + "'");
}

inline PipelineConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open '" + path + "'");
    PipelineConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config: line " + std::to_string(lineno) + " is not key=value");
        apply_config_line(cfg, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
    }
    return cfg;
}

}  // namespace occrec
