#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>

#include "iarn/config.hpp"
#include "iarn/image_io.hpp"
#include "iarn/losses.hpp"
#include "iarn/pipeline.hpp"
#include "iarn/selfcheck.hpp"

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitDivergence = 4;

iarn::ScalePair parse_single_scale(const std::string& arg) {
    if (arg.find(':') != std::string::npos)
        throw iarn::UsageError("sweep syntax is only valid for eval --scales");
    return iarn::parse_scale(arg);
}

std::vector<iarn::Image> load_dataset(const std::string& dir) {
    std::vector<iarn::Image> images;
    for (const std::string& path : iarn::list_image_files(dir))
        images.push_back(iarn::load_image(path));
    if (images.empty()) throw iarn::IoError("no images found in '" + dir + "'");
    return images;
}

int cmd_train(const std::string& config_path, const std::string& data_dir,
              const std::string& out_path, const std::string& log_path,
              const std::string& resume_path, const std::string& overrides) {
    iarn::TrainConfig cfg;
    iarn::Backbone<float>* resumed = nullptr;
    iarn::LoadedCheckpoint loaded;
    if (!resume_path.empty()) {
        loaded = iarn::load_checkpoint(resume_path);
        cfg = loaded.config;
        resumed = &loaded.net;
    }
    if (!config_path.empty()) cfg = iarn::load_train_config(config_path, cfg);
    if (!overrides.empty()) cfg = iarn::parse_train_config(overrides, cfg);

    std::vector<iarn::Image> raw = load_dataset(data_dir);
    std::vector<iarn::Image> images;
    for (auto& img : raw) images.push_back(iarn::adapt_channels(img, cfg.backbone.channels));

    iarn::Trainer trainer(cfg, std::move(images));
    if (resumed) {
        // Keep the resumed weights; the constructor made fresh ones.
        auto dst = trainer.net().params();
        auto src = resumed->params();
        for (size_t i = 0; i < dst.size(); ++i) {
            auto values = dst[i].value.mutable_values();
            auto from = src[i].value.values();
            std::copy(from.begin(), from.end(), values.begin());
        }
    }

    std::ofstream log;
    if (!log_path.empty()) {
        log.open(log_path, std::ios::trunc);
        if (!log) throw iarn::IoError("cannot open loss log '" + log_path + "'");
    }
    std::cout << "training " << cfg.iterations << " iterations, "
              << iarn::param_count(cfg.backbone) << " parameters\n";
    trainer.run(cfg.iterations, log.is_open() ? &log : nullptr);

    iarn::save_checkpoint(out_path, cfg, trainer.net().params());
    std::cout << "saved checkpoint to " << out_path << "\n";
    return 0;
}

int cmd_downscale(const std::string& model_path, const std::string& scale_arg,
                  const std::string& input_path, const std::string& output_path) {
    iarn::ScalePair scale = parse_single_scale(scale_arg);
    iarn::LoadedCheckpoint model = iarn::load_checkpoint(model_path);
    iarn::Image x = iarn::load_image(input_path);
    iarn::DownscaleResult result = iarn::model_downscale(model.net, model.config, x, scale);
    iarn::save_image(output_path, result.lr);
    std::cout << "wrote " << output_path << " (" << result.lr.width << "x" << result.lr.height
              << ", realized scale " << result.realized.h << "x" << result.realized.v << ")\n";
    return 0;
}

int cmd_upscale(const std::string& model_path, const std::string& scale_arg,
                const std::string& size_arg, const std::string& input_path,
                const std::string& output_path) {
    iarn::ScalePair scale = parse_single_scale(scale_arg);
    iarn::LoadedCheckpoint model = iarn::load_checkpoint(model_path);
    iarn::Image y_l = iarn::load_image(input_path);

    std::optional<iarn::SizeHW> target;
    if (!size_arg.empty()) {
        size_t x = size_arg.find('x');
        if (x == std::string::npos)
            throw iarn::UsageError("--size must be WxH, got '" + size_arg + "'");
        try {
            target = iarn::SizeHW{std::stoi(size_arg.substr(x + 1)),
                                  std::stoi(size_arg.substr(0, x))};
        } catch (const std::exception&) {
            throw iarn::UsageError("--size must be WxH, got '" + size_arg + "'");
        }
    }

    iarn::UpscaleResult result =
        iarn::model_upscale(model.net, model.config, y_l, scale, target);
    iarn::save_image(output_path, result.hr);
    std::cout << "wrote " << output_path << " (" << result.hr.width << "x" << result.hr.height
              << ", realized scale " << result.realized.h << "x" << result.realized.v << ")\n";
    return 0;
}

int cmd_roundtrip(const std::string& model_path, const std::string& scale_arg,
                  const std::string& input_path, const std::string& lr_path,
                  const std::string& out_path) {
    iarn::ScalePair scale = parse_single_scale(scale_arg);
    iarn::LoadedCheckpoint model = iarn::load_checkpoint(model_path);
    iarn::Image x = iarn::load_image(input_path);
    iarn::Image adapted = iarn::adapt_channels(x, model.net.config().channels);

    iarn::DownscaleResult down = iarn::model_downscale(model.net, model.config, adapted, scale);
    iarn::UpscaleResult up =
        iarn::model_upscale(model.net, model.config, iarn::clamp01(down.lr), scale,
                            iarn::SizeHW{adapted.height, adapted.width});
    if (!lr_path.empty()) iarn::save_image(lr_path, down.lr);
    if (!out_path.empty()) iarn::save_image(out_path, up.hr);

    iarn::Image restored = iarn::clamp01(up.hr);
    iarn::Image baseline = iarn::clamp01(iarn::bicubic_roundtrip(adapted, scale));
    std::cout << "restored: psnr_rgb " << iarn::psnr(restored, adapted, iarn::PsnrMode::rgb)
              << " dB, psnr_y " << iarn::psnr(restored, adapted, iarn::PsnrMode::y_channel)
              << " dB, ssim " << iarn::ssim(restored, adapted) << "\n";
    std::cout << "bicubic : psnr_rgb " << iarn::psnr(baseline, adapted, iarn::PsnrMode::rgb)
              << " dB, psnr_y " << iarn::psnr(baseline, adapted, iarn::PsnrMode::y_channel)
              << " dB, ssim " << iarn::ssim(baseline, adapted) << "\n";
    return 0;
}

int cmd_eval(const std::string& model_path, const std::string& data_dir,
             const std::string& scales_arg, const std::string& csv_path) {
    std::vector<iarn::ScalePair> scales = iarn::parse_scale_list(scales_arg);
    iarn::LoadedCheckpoint model = iarn::load_checkpoint(model_path);
    std::vector<iarn::Image> images = load_dataset(data_dir);
    for (auto& img : images) img = iarn::adapt_channels(img, model.net.config().channels);

    std::ofstream csv;
    if (!csv_path.empty()) {
        csv.open(csv_path, std::ios::trunc);
        if (!csv) throw iarn::IoError("cannot open '" + csv_path + "' for writing");
        csv << "scale_h,scale_v,psnr_y,psnr_rgb,ssim,base_psnr_y,base_ssim\n";
    }

    std::cout << std::fixed << std::setprecision(4);
    std::cout << "scale_h scale_v   psnr_y psnr_rgb   ssim   base_psnr_y base_ssim  (n="
              << images.size() << ")\n";
    for (const iarn::ScalePair& scale : scales) {
        double sum_py = 0, sum_prgb = 0, sum_ssim = 0, sum_bpy = 0, sum_bssim = 0;
        for (const iarn::Image& x : images) {
            iarn::DownscaleResult down =
                iarn::model_downscale(model.net, model.config, x, scale);
            iarn::UpscaleResult up =
                iarn::model_upscale(model.net, model.config, iarn::clamp01(down.lr), scale,
                                    iarn::SizeHW{x.height, x.width});
            iarn::Image restored = iarn::clamp01(up.hr);
            iarn::Image baseline = iarn::clamp01(iarn::bicubic_roundtrip(x, scale));
            sum_py += iarn::psnr(restored, x, iarn::PsnrMode::y_channel);
            sum_prgb += iarn::psnr(restored, x, iarn::PsnrMode::rgb);
            sum_ssim += iarn::ssim(restored, x);
            sum_bpy += iarn::psnr(baseline, x, iarn::PsnrMode::y_channel);
            sum_bssim += iarn::ssim(baseline, x);
        }
        double n = static_cast<double>(images.size());
        std::cout << std::setw(7) << scale.h << ' ' << std::setw(7) << scale.v << ' '
                  << std::setw(8) << sum_py / n << ' ' << std::setw(8) << sum_prgb / n << ' '
                  << std::setw(6) << sum_ssim / n << ' ' << std::setw(11) << sum_bpy / n << ' '
                  << std::setw(9) << sum_bssim / n << '\n';
        if (csv.is_open())
            csv << scale.h << ',' << scale.v << ',' << sum_py / n << ',' << sum_prgb / n << ','
                << sum_ssim / n << ',' << sum_bpy / n << ',' << sum_bssim / n << '\n';
    }
    return 0;
}

int cmd_info(const std::string& model_path) {
    iarn::LoadedCheckpoint model = iarn::load_checkpoint(model_path);
    std::cout << "parameters: " << iarn::param_count(model.config.backbone) << "\n";
    std::cout << iarn::serialize_train_config(model.config);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"invertible arbitrary image rescaling"};
    app.require_subcommand(1);

    std::string config_path, data_dir, out_path, log_path, resume_path, overrides;
    auto* train = app.add_subcommand("train", "train a model on an image directory");
    train->add_option("--config", config_path, "key = value config file");
    train->add_option("--data", data_dir, "training image directory")->required();
    train->add_option("--out", out_path, "output checkpoint path")->required();
    train->add_option("--log", log_path, "loss log file");
    train->add_option("--resume", resume_path, "checkpoint to resume from");
    train->add_option("--set", overrides, "inline overrides, e.g. \"seed = 3\\nbase_lr = 1e-4\"");

    std::string model_path, scale_arg = "2.0", input_path, output_path, size_arg;
    auto* down = app.add_subcommand("downscale", "model-driven downscale");
    down->add_option("--model", model_path, "checkpoint")->required();
    down->add_option("--scale", scale_arg, "scale factor (A or AxB)");
    down->add_option("input", input_path, "input image")->required();
    down->add_option("output", output_path, "output image")->required();

    auto* up = app.add_subcommand("upscale", "model-driven upscale");
    up->add_option("--model", model_path, "checkpoint")->required();
    up->add_option("--scale", scale_arg, "scale factor (A or AxB)");
    up->add_option("--size", size_arg, "exact output size WxH");
    up->add_option("input", input_path, "input image")->required();
    up->add_option("output", output_path, "output image")->required();

    std::string lr_path;
    auto* rt = app.add_subcommand("roundtrip", "downscale then restore, report fidelity");
    rt->add_option("--model", model_path, "checkpoint")->required();
    rt->add_option("--scale", scale_arg, "scale factor (A or AxB)");
    rt->add_option("--lr", lr_path, "write the LR intermediate here");
    rt->add_option("--out", out_path, "write the restored image here");
    rt->add_option("input", input_path, "input image")->required();

    std::string scales_arg = "2.0", csv_path;
    auto* ev = app.add_subcommand("eval", "metrics sweep over a directory");
    ev->add_option("--model", model_path, "checkpoint")->required();
    ev->add_option("--data", data_dir, "image directory")->required();
    ev->add_option("--scales", scales_arg, "list: A, AxB, lo:hi:step, comma separated");
    ev->add_option("--csv", csv_path, "CSV output path");

    bool wide = false;
    auto* self = app.add_subcommand("selfcheck", "run the invariant suites");
    self->add_flag("--f64", wide, "64-bit mode with tighter tolerances");

    auto* info = app.add_subcommand("info", "print parameter count and config");
    info->add_option("--model", model_path, "checkpoint")->required();

    try {
        app.parse(argc, argv);
        if (train->parsed())
            return cmd_train(config_path, data_dir, out_path, log_path, resume_path, overrides);
        if (down->parsed()) return cmd_downscale(model_path, scale_arg, input_path, output_path);
        if (up->parsed())
            return cmd_upscale(model_path, scale_arg, size_arg, input_path, output_path);
        if (rt->parsed())
            return cmd_roundtrip(model_path, scale_arg, input_path, lr_path, out_path);
        if (ev->parsed()) return cmd_eval(model_path, data_dir, scales_arg, csv_path);
        if (self->parsed()) {
            bool ok = iarn::print_selfcheck(iarn::run_selfcheck(wide), std::cout);
            return ok ? 0 : 1;
        }
        if (info->parsed()) return cmd_info(model_path);
        return kExitUsage;
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    } catch (const iarn::UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const iarn::DivergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDivergence;
    } catch (const iarn::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const iarn::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
