#include "earlyrisk/registry.hpp"

#include <algorithm>

namespace earlyrisk {

const std::vector<std::string>& model_names() {
    static const std::vector<std::string> names{"lr",       "rf",  "svm", "knn",         "dt",  "adaboost",
                                                "gnb",      "gb",  "extra_trees", "xgb", "dnet"};
    return names;
}

bool is_known_model(const std::string& name) {
    const auto& names = model_names();
    return std::find(names.begin(), names.end(), name) != names.end();
}

std::uint64_t model_stream(const std::string& name) {
    const auto& names = model_names();
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) {
        throw Error("unknown model '" + name + "'");
    }
    return 1000 + static_cast<std::uint64_t>(it - names.begin());
}

eval::ModelFactory make_factory(const std::string& name, const ModelSettings& s) {
    if (name == "lr") {
        return [o = s.lr](const Matrix& x, std::span<const int> y, std::uint64_t seed) mutable -> ModelPtr {
            o.seed = seed;
            return std::make_unique<baselines::LogisticModel>(baselines::fit_logistic(x, y, o));
        };
    }
    if (name == "svm") {
        return [o = s.svm](const Matrix& x, std::span<const int> y, std::uint64_t seed) mutable -> ModelPtr {
            o.seed = seed;
            return std::make_unique<baselines::LinearSvmModel>(baselines::fit_linear_svm(x, y, o));
        };
    }
    if (name == "knn") {
        return [k = s.knn_k](const Matrix& x, std::span<const int> y, std::uint64_t) -> ModelPtr {
            return std::make_unique<baselines::KnnModel>(baselines::fit_knn(x, y, k));
        };
    }
    if (name == "gnb") {
        return [v = s.gnb_var_smoothing](const Matrix& x, std::span<const int> y, std::uint64_t) -> ModelPtr {
            return std::make_unique<baselines::GaussianNbModel>(baselines::fit_gnb(x, y, v));
        };
    }
    if (name == "dt") {
        return [o = s.dt](const Matrix& x, std::span<const int> y, std::uint64_t seed) mutable -> ModelPtr {
            o.seed = seed;
            return std::make_unique<forests::TreeModel>(forests::fit_decision_tree(x, y, o));
        };
    }
    if (name == "rf") {
        return [o = s.rf](const Matrix& x, std::span<const int> y, std::uint64_t seed) mutable -> ModelPtr {
            o.seed = seed;
            return std::make_unique<forests::ForestModel>(forests::fit_random_forest(x, y, o));
        };
    }
    if (name == "extra_trees") {
        return [o = s.extra_trees](const Matrix& x, std::span<const int> y, std::uint64_t seed) mutable -> ModelPtr {
            o.seed = seed;
            return std::make_unique<forests::ForestModel>(forests::fit_extra_trees(x, y, o));
        };
    }
    if (name == "adaboost") {
        return [o = s.adaboost](const Matrix& x, std::span<const int> y, std::uint64_t seed) mutable -> ModelPtr {
            o.seed = seed;
            return std::make_unique<boosting::AdaBoostModel>(boosting::fit_adaboost(x, y, o));
        };
    }
    if (name == "gb") {
        return [o = s.gb](const Matrix& x, std::span<const int> y, std::uint64_t seed) mutable -> ModelPtr {
            o.seed = seed;
            return std::make_unique<boosting::BoostedTreesModel>(boosting::fit_gradient_boosting(x, y, o));
        };
    }
    if (name == "xgb") {
        return [o = s.xgb](const Matrix& x, std::span<const int> y, std::uint64_t seed) mutable -> ModelPtr {
            o.seed = seed;
            return std::make_unique<boosting::BoostedTreesModel>(boosting::fit_xgb_style(x, y, o));
        };
    }
    if (name == "dnet") {
        return [o = s.dnet](const Matrix& x, std::span<const int> y, std::uint64_t seed) mutable -> ModelPtr {
            o.seed = seed;
            o.input_length = x.cols();
            return std::make_unique<dnet::DNetModel>(dnet::fit_dnet(x, y, o));
        };
    }
    throw Error("unknown model '" + name + "'");
}

}  // namespace earlyrisk
