#include "iprior/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

int fail(iprior::ErrorCode code, const std::string &message) {
    std::cerr << "error: " << iprior::error_code_name(code) << ": " << message << "\n";
    return iprior::exit_status(code);
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"I-prior regression: fit, predict, compare, gram"};
    app.require_subcommand(1);

    std::string config, model, data, covariate;
    std::string out;
    std::vector<std::string> configs;

    auto *fit = app.add_subcommand("fit", "Estimate a model and write its artifacts");
    fit->add_option("config", config, "Run configuration")->required();
    fit->add_option("-o,--out", out, "Output directory (overrides [output] dir)");

    auto *predict = app.add_subcommand("predict", "Predict from a saved model");
    predict->add_option("model", model, "model.json")->required();
    predict->add_option("data", data, "CSV laid out like the training data")->required();
    predict->add_option("-o,--out", out, "Output CSV (default stdout)");

    auto *compare = app.add_subcommand("compare", "Fit several configurations and rank them by BIC");
    compare->add_option("configs", configs, "Run configurations")->required();
    compare->add_option("-o,--out", out, "Output CSV (default stdout)");

    auto *gram = app.add_subcommand("gram", "Dump the centered training Gram of one covariate");
    gram->add_option("config", config, "Run configuration")->required();
    gram->add_option("covariate", covariate, "Covariate name")->required();
    gram->add_option("-o,--out", out, "Output CSV (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        return fail(iprior::ErrorCode::config_error, e.what());
    }

    const auto out_path = out.empty() ? std::nullopt : std::optional<std::filesystem::path>(out);
    try {
        if (*fit)
            iprior::cmd_fit(config, out_path);
        else if (*predict)
            iprior::cmd_predict(model, data, out_path, std::cout);
        else if (*compare)
            iprior::cmd_compare({configs.begin(), configs.end()}, out_path, std::cout);
        else if (*gram)
            iprior::cmd_gram(config, covariate, out_path, std::cout);
    } catch (const iprior::Error &e) {
        return fail(e.code(), e.what());
    } catch (const std::exception &e) {
        std::cerr << "error: INTERNAL: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
