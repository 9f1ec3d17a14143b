#pragma once

// `lgtm` command-line front end.
//
// Exit codes: 0 ok, 1 I/O, 2 argument, 3 data-contract violation, 4 backend failure.
// Every subcommand accepts --config <json>; its keys are long flag names and
// explicit flags take precedence. LGTM_BACKEND sets the default --backend.

#include <CLI11.hpp>

#include <atomic>
#include <csignal>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lgtm/backend.hpp"
#include "lgtm/error.hpp"
#include "lgtm/fixtures.hpp"
#include "lgtm/latent.hpp"
#include "lgtm/light_eval.hpp"
#include "lgtm/light_mask.hpp"
#include "lgtm/ltz_io.hpp"
#include "lgtm/png_io.hpp"
#include "lgtm/sensitivity.hpp"
#include "lgtm/service.hpp"

namespace lgtm::cli {

/// Flat JSON object -> CLI11 config items for the selected subcommand.
/// Arrays become comma-joined values.
class JsonConfig : public CLI::Config {
 public:
  explicit JsonConfig(const CLI::App* root) : root_(root) {}

  std::string to_config(const CLI::App*, bool, bool, std::string) const override { return "{}"; }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(input);
    } catch (const nlohmann::json::exception& e) {
      throw CLI::ConversionError(std::string("config file is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw CLI::ConversionError("config file must contain a JSON object");

    std::vector<std::string> parents;
    if (const auto subs = root_->get_subcommands(); !subs.empty()) parents.push_back(subs.front()->get_name());

    std::vector<CLI::ConfigItem> items;
    for (const auto& [key, value] : j.items()) {
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      item.inputs.push_back(scalar(key, value));
      items.push_back(std::move(item));
    }
    return items;
  }

 private:
  const CLI::App* root_;

  static std::string scalar(const std::string& key, const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number()) return v.dump();
    if (v.is_array()) {
      std::string out;
      for (const auto& e : v) {
        if (!out.empty()) out += ',';
        out += scalar(key, e);
      }
      return out;
    }
    throw CLI::ConversionError("config key '" + key + "' must be a scalar or array");
  }
};

inline std::vector<double> parse_numbers(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string token;
  while (std::getline(in, token, ',')) {
    try {
      std::size_t used = 0;
      const double v = std::stod(token, &used);
      if (used != token.size()) throw std::invalid_argument(token);
      out.push_back(v);
    } catch (const std::exception&) {
      throw ArgumentError(what + ": '" + token + "' is not a number");
    }
  }
  if (out.empty()) throw ArgumentError(what + " is empty");
  return out;
}

inline std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> out;
  std::stringstream in(text);
  std::string token;
  while (std::getline(in, token, ',')) {
    try {
      std::size_t used = 0;
      if (!token.empty() && token[0] == '-') throw std::invalid_argument(token);
      out.push_back(std::stoull(token, &used));
      if (used != token.size()) throw std::invalid_argument(token);
    } catch (const std::exception&) {
      throw ArgumentError("--seeds: '" + token + "' is not a non-negative integer");
    }
  }
  if (out.empty()) throw ArgumentError("--seeds is empty");
  return out;
}

/// "WxH" -> {W, H}
inline ImageSize parse_size(const std::string& text) {
  const auto x = text.find('x');
  try {
    if (x == std::string::npos) throw std::invalid_argument(text);
    std::size_t used_w = 0, used_h = 0;
    const std::string w = text.substr(0, x), h = text.substr(x + 1);
    if (w.empty() || h.empty() || w[0] == '-' || h[0] == '-') throw std::invalid_argument(text);
    ImageSize size{std::stoul(w, &used_w), std::stoul(h, &used_h)};
    if (used_w != w.size() || used_h != h.size()) throw std::invalid_argument(text);
    if (size.width == 0 || size.height == 0) throw ArgumentError("--size dimensions must be positive");
    return size;
  } catch (const ArgumentError&) {
    throw;
  } catch (const std::exception&) {
    throw ArgumentError("--size must look like WIDTHxHEIGHT, got '" + text + "'");
  }
}

inline Point2 parse_point(const std::string& text, const std::string& flag) {
  const auto v = parse_numbers(text, flag);
  if (v.size() != 2) throw ArgumentError(flag + " expects x,y");
  return {v[0], v[1]};
}

/// Light source options shared by `mask` and `generate`.
struct LightFlags {
  std::string point;
  std::string segment;
  std::string spec_file;
  std::optional<double> radius;

  void add_to(CLI::App& app) {
    auto* p = app.add_option("--point", point, "Point light at normalized x,y");
    auto* s = app.add_option("--segment", segment, "Segment light x1,y1,x2,y2");
    auto* f = app.add_option("--light-spec", spec_file, "LightSpec JSON file");
    p->excludes(s)->excludes(f);
    s->excludes(f);
    app.add_option("--radius", radius, "Falloff radius as a fraction of the frame diagonal, 0 < r <= 4");
  }

  bool present() const { return !point.empty() || !segment.empty() || !spec_file.empty(); }

  LightSpec resolve() const {
    if (!spec_file.empty()) {
      const Bytes raw = read_file(spec_file);
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(raw.begin(), raw.end());
      } catch (const nlohmann::json::exception& e) {
        throw ArgumentError("light spec file is not valid JSON: " + std::string(e.what()));
      }
      LightSpec spec = light_spec_from_json(j, JsonMode::strict);
      if (radius) {
        spec.radius = *radius;
        spec.validate();
      }
      return spec;
    }
    if (!radius) throw ArgumentError("--radius is required with --point/--segment");
    LightSpec spec;
    if (!point.empty()) {
      spec = LightSpec::point(parse_point(point, "--point"), *radius);
    } else {
      const auto v = parse_numbers(segment, "--segment");
      if (v.size() != 4) throw ArgumentError("--segment expects x1,y1,x2,y2");
      spec = LightSpec::segment({v[0], v[1]}, {v[2], v[3]}, *radius);
    }
    spec.validate();
    return spec.clamped();
  }
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  write_file(path, std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

inline std::atomic<service::Service*> g_running_service{nullptr};

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Light-guided latent diffusion: masks, latent guidance, generation, analysis and evaluation", "lgtm"};
  app.require_subcommand(1);
  app.fallthrough();
  app.config_formatter(std::make_shared<JsonConfig>(&app));
  app.set_config("--config", "", "JSON file of flag defaults for the subcommand; explicit flags win");
  app.allow_config_extras(CLI::config_extras_mode::error);

  auto subcommand = [&](const std::string& name, const std::string& description) {
    CLI::App* sub = app.add_subcommand(name, description);
    sub->footer("Global options:\n  --config TEXT               JSON file of flag defaults for this subcommand; explicit flags win");
    return sub;
  };

  // mask -------------------------------------------------------------------
  LightFlags mask_light;
  std::string mask_size, mask_out, mask_from;
  CLI::App* mask = subcommand("mask", "Render a light mask to a 16-bit PNG");
  mask_light.add_to(*mask);
  mask->add_option("--from", mask_from, "Import an existing mask PNG instead of a light source");
  mask->add_option("--size", mask_size, "Output size WxH (default 512x512, or the imported size)");
  mask->add_option("--out", mask_out, "Output PNG path")->required();

  // noise ------------------------------------------------------------------
  std::uint64_t noise_seed = 0;
  std::int64_t noise_timestep = kDefaultTimestep;
  std::string noise_size = "512x512", noise_out;
  CLI::App* noise = subcommand("noise", "Sample seeded initial latent noise to an LTZ file");
  noise->add_option("--seed", noise_seed, "RNG seed");
  noise->add_option("--size", noise_size, "Image size WxH; the latent is (H/8)x(W/8)");
  noise->add_option("--timestep", noise_timestep, "Timestep label recorded in the file");
  noise->add_option("--out", noise_out, "Output LTZ path")->required();

  // guide ------------------------------------------------------------------
  std::string guide_latents, guide_mask, guide_out;
  bool guide_resample = false, guide_normalize = false;
  CLI::App* guide = subcommand("guide", "Apply light guidance to channel 1 of an LTZ latent");
  guide->add_option("--latents", guide_latents, "Input LTZ")->required();
  guide->add_option("--mask", guide_mask, "Mask PNG (16-bit)")->required();
  guide->add_option("--out", guide_out, "Output LTZ")->required();
  guide->add_flag("--resample", guide_resample, "Bilinearly resample the mask to latent size");
  guide->add_flag("--normalize", guide_normalize, "Rescale masked cells of channel 1 to unit std");

  // generate ---------------------------------------------------------------
  LightFlags gen_light;
  std::string gen_prompt, gen_negative, gen_size = "512x512", gen_backend = "mock", gen_out = "generated.png";
  std::string gen_report, gen_condition, gen_latents_out;
  std::uint64_t gen_seed = 0;
  int gen_steps = 50;
  double gen_guidance = 7.5;
  bool gen_normalize = false;
  CLI::App* gen = subcommand("generate", "Generate an image with optional light guidance");
  gen->add_option("--prompt", gen_prompt, "Text prompt")->required();
  gen->add_option("--negative-prompt", gen_negative, "Negative prompt");
  gen->add_option("--seed", gen_seed, "Initial-noise seed");
  gen->add_option("--steps", gen_steps, "Denoising steps");
  gen->add_option("--guidance-scale", gen_guidance, "Classifier-free guidance scale");
  gen->add_option("--size", gen_size, "Output size WxH (multiples of 8)");
  gen_light.add_to(*gen);
  gen->add_option("--condition", gen_condition, "File passed to the backend as opaque structural conditioning");
  gen->add_option("--backend", gen_backend, "mock | adapter:<name>")->envname("LGTM_BACKEND");
  gen->add_option("--out", gen_out, "Output PNG path");
  gen->add_option("--report", gen_report, "Write a JSON summary here");
  gen->add_option("--latents-out", gen_latents_out, "Also write the guided initial noise as LTZ");
  gen->add_flag("--normalize", gen_normalize, "Rescale masked cells of channel 1 to unit std");

  // sweep ------------------------------------------------------------------
  std::string sweep_prompt, sweep_seeds = "0", sweep_channels = "1,2,3,4", sweep_alphas = "0.25,0.5,1,2,4";
  std::string sweep_size = "512x512", sweep_backend = "mock", sweep_report, sweep_csv;
  CLI::App* sweep = subcommand("sweep", "Channel-wise scaling sweep over fixed seeds");
  sweep->add_option("--prompt", sweep_prompt, "Text prompt");
  sweep->add_option("--seeds", sweep_seeds, "Comma-separated seeds");
  sweep->add_option("--channels", sweep_channels, "Comma-separated channels in {1,2,3,4}");
  sweep->add_option("--alphas", sweep_alphas, "Comma-separated scaling factors; must include 1");
  sweep->add_option("--size", sweep_size, "Output size WxH");
  sweep->add_option("--backend", sweep_backend, "mock | adapter:<name>")->envname("LGTM_BACKEND");
  sweep->add_option("--report", sweep_report, "JSON report path (stdout if omitted)");
  sweep->add_option("--csv", sweep_csv, "Also write the entries as CSV");

  // fixtures ---------------------------------------------------------------
  std::string fix_out;
  std::size_t fix_per_direction = 100, fix_size = 128;
  std::uint64_t fix_seed = 0;
  std::optional<std::uint64_t> fix_shuffle;
  CLI::App* fixtures = subcommand("fixtures", "Write a synthetic shadow-direction dataset");
  fixtures->add_option("--out", fix_out, "Output directory")->required();
  fixtures->add_option("--per-direction", fix_per_direction, "Scenes per light direction");
  fixtures->add_option("--seed", fix_seed, "Scene seed");
  fixtures->add_option("--size", fix_size, "Square image size in pixels");
  fixtures->add_option("--shuffle-seed", fix_shuffle, "Randomly permute the specified directions");

  // eval -------------------------------------------------------------------
  std::string eval_dataset, eval_report, eval_table, eval_method = "LGTM";
  double eval_expand = kRegionExpansion;
  CLI::App* eval = subcommand("eval", "Score shadow direction against the specified light direction");
  eval->add_option("--dataset", eval_dataset, "Directory with manifest.json and images")->required();
  eval->add_option("--report", eval_report, "JSON report path (stdout if omitted)");
  eval->add_option("--table", eval_table, "Plain-text accuracy table path");
  eval->add_option("--method", eval_method, "Row label for the table");
  eval->add_option("--expand", eval_expand, "Subject box expansion factor");

  // serve ------------------------------------------------------------------
  std::string serve_host = "127.0.0.1", serve_store = "lgtm-store", serve_backend = "mock", serve_cors = "*";
  int serve_port = 8080;
  std::size_t serve_queue = 32;
  CLI::App* serve = subcommand("serve", "Run the HTTP job service");
  serve->add_option("--host", serve_host, "Bind address");
  serve->add_option("--port", serve_port, "Bind port (0 picks a free port)");
  serve->add_option("--store", serve_store, "Job and image store directory");
  serve->add_option("--queue", serve_queue, "Job queue capacity");
  serve->add_option("--backend", serve_backend, "mock | adapter:<name>")->envname("LGTM_BACKEND");
  serve->add_option("--cors-origin", serve_cors, "Access-Control-Allow-Origin value");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::FileError& e) {
    err << "lgtm: " << e.what() << '\n';
    return 1;
  } catch (const CLI::ParseError& e) {
    err << "lgtm: " << e.what() << '\n';
    return 2;
  }

  try {
    if (mask->parsed()) {
      if (mask_from.empty() == !mask_light.present()) {
        throw ArgumentError("give exactly one of --point, --segment, --light-spec or --from");
      }
      LightMask m;
      if (!mask_from.empty()) {
        m = read_mask_png(mask_from);
        if (!mask_size.empty()) {
          const ImageSize size = parse_size(mask_size);
          m = resample_mask(m, size.width, size.height);
        }
      } else {
        const ImageSize size = parse_size(mask_size.empty() ? "512x512" : mask_size);
        m = make_light_mask(mask_light.resolve(), size.width, size.height);
      }
      write_mask_png(mask_out, m);
      return 0;
    }

    if (noise->parsed()) {
      const LatentDims dims = latent_dims(parse_size(noise_size));
      write_ltz(noise_out, sample_initial_noise(noise_seed, dims, noise_timestep));
      return 0;
    }

    if (guide->parsed()) {
      const LatentNoise z = read_ltz(guide_latents);
      LightMask m = read_mask_png(guide_mask);
      if (m.width() != z.width() || m.height() != z.height()) {
        if (!guide_resample) {
          throw ContractError("mask is " + std::to_string(m.width()) + "x" + std::to_string(m.height()) +
                              " but the latent is " + std::to_string(z.width()) + "x" + std::to_string(z.height()) +
                              "; pass --resample to resize the mask");
        }
        m = resample_mask(m, z.width(), z.height());
      }
      write_ltz(guide_out, apply_light_guidance(z, m, GuidanceOptions{guide_normalize}));
      return 0;
    }

    if (gen->parsed()) {
      GenerationRequest request;
      request.prompt = gen_prompt;
      if (!gen_negative.empty()) request.negative_prompt = gen_negative;
      request.seed = gen_seed;
      request.steps = gen_steps;
      request.guidance_scale = gen_guidance;
      request.output_size = parse_size(gen_size);
      if (gen_light.present()) {
        request.light = gen_light.resolve();
      } else if (gen_light.radius) {
        throw ArgumentError("--radius needs --point, --segment or --light-spec");
      }
      if (!gen_condition.empty()) {
        const Bytes payload = read_file(gen_condition);
        request.structural_condition = std::string(payload.begin(), payload.end());
      }
      request.validate();

      auto backend = make_backend(gen_backend);
      const GuidanceOptions options{gen_normalize};
      if (!gen_latents_out.empty()) write_ltz(gen_latents_out, prepare_initial_noise(request, *backend, options));
      const GeneratedImage image = generate(request, *backend, options);
      write_rgb_png(gen_out, image.pixels);
      if (!gen_report.empty()) {
        const LuminanceStats stats = luminance_stats(image.pixels);
        nlohmann::json report = {
            {"request", to_json(request)},
            {"request_fingerprint", image.request_fingerprint},
            {"backend", backend->name()},
            {"output", gen_out},
            {"mean_luminance", stats.mean_luminance},
            {"luminance_centroid", {{"x", stats.centroid.x}, {"y", stats.centroid.y}}},
        };
        write_text(gen_report, report.dump(2) + "\n");
      }
      return 0;
    }

    if (sweep->parsed()) {
      SweepConfig config;
      config.prompt = sweep_prompt;
      config.seeds = parse_seeds(sweep_seeds);
      config.channels.clear();
      for (double c : parse_numbers(sweep_channels, "--channels")) {
        if (c != static_cast<int>(c)) throw ArgumentError("--channels must be integers");
        config.channels.push_back(static_cast<int>(c));
      }
      config.alphas = parse_numbers(sweep_alphas, "--alphas");
      config.output_size = parse_size(sweep_size);
      config.validate();

      auto backend = make_backend(sweep_backend);
      const SweepReport report = run_sweep(config, *backend);
      const std::string text = to_json(report).dump(2) + "\n";
      if (sweep_report.empty()) {
        out << text;
      } else {
        write_text(sweep_report, text);
      }
      if (!sweep_csv.empty()) write_text(sweep_csv, to_csv(report));
      return 0;
    }

    if (fixtures->parsed()) {
      if (fix_per_direction == 0) throw ArgumentError("--per-direction must be positive");
      if (fix_size < 16) throw ArgumentError("--size must be at least 16");
      FixtureStyle style;
      style.size = fix_size;
      auto samples = make_fixture_set(fix_per_direction, fix_seed, style);
      if (fix_shuffle) samples = shuffle_directions(std::move(samples), *fix_shuffle);
      write_dataset(fix_out, samples);
      return 0;
    }

    if (eval->parsed()) {
      if (!std::isfinite(eval_expand) || eval_expand < 1.0) throw ArgumentError("--expand must be >= 1");
      EvalOptions options;
      options.expansion = eval_expand;
      const auto samples = load_dataset(eval_dataset);
      const LightAccuracyReport report = evaluate_light_accuracy(samples, options);
      const std::string text = to_json(report).dump(2) + "\n";
      if (eval_report.empty()) {
        out << text;
      } else {
        write_text(eval_report, text);
      }
      const std::string table = accuracy_table({{eval_method, report}});
      if (!eval_table.empty()) write_text(eval_table, table);
      if (!eval_report.empty()) out << table;
      return 0;
    }

    if (serve->parsed()) {
      if (serve_port < 0 || serve_port > 65535) throw ArgumentError("--port must be in [0, 65535]");
      if (serve_queue == 0) throw ArgumentError("--queue must be positive");
      service::ServiceOptions options;
      options.store_dir = serve_store;
      options.queue_capacity = serve_queue;
      options.cors_origin = serve_cors;
      service::Service svc(options, make_backend(serve_backend));
      const int port = svc.bind(serve_host, serve_port);
      out << "lgtm: serving on http://" << serve_host << ':' << port << '\n' << std::flush;
      g_running_service = &svc;
      auto on_signal = [](int) {
        if (auto* s = g_running_service.load()) s->stop();
      };
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      svc.run();
      g_running_service = nullptr;
      return 0;
    }
  } catch (const Error& e) {
    err << "lgtm: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "lgtm: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace lgtm::cli
