#pragma once

#include <stdexcept>
#include <vector>

#include "dgq/mdp.hpp"

namespace dgq {

/// Total deterministic map from fine action id to category id.
struct Classifier {
    std::vector<CategoryId> assign;  // indexed by action id
    int num_categories = 0;

    CategoryId classify(ActionId a) const {
        if (a < 0 || a >= static_cast<int>(assign.size()))
            throw std::domain_error("classify: unknown action id");
        return assign[static_cast<size_t>(a)];
    }

    int num_actions() const { return static_cast<int>(assign.size()); }

    /// Action ids belonging to one category, ascending.
    std::vector<ActionId> members(CategoryId c) const {
        std::vector<ActionId> out;
        for (int a = 0; a < num_actions(); ++a)
            if (assign[static_cast<size_t>(a)] == c) out.push_back(a);
        return out;
    }
};

}  // namespace dgq
