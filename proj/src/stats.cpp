#include "feedsim/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace feedsim
{
    std::vector<double> average_ranks(std::span<const double> values)
    {
        const std::size_t n = values.size();
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

        std::vector<double> ranks(n);
        std::size_t i = 0;
        while (i < n)
        {
            std::size_t j = i + 1;
            while (j < n && values[order[j]] == values[order[i]])
                ++j;
            // positions i..j-1 (0-based) share rank mean((i+1)..j)
            const double shared = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
            for (std::size_t k = i; k < j; ++k)
                ranks[order[k]] = shared;
            i = j;
        }
        return ranks;
    }

    double mean(std::span<const double> values)
    {
        if (values.empty())
            return 0.0;
        return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    }

    std::optional<double> pearson(std::span<const double> x, std::span<const double> y)
    {
        if (x.size() != y.size())
            throw std::invalid_argument("pearson: size mismatch");
        if (x.size() < 2)
            return std::nullopt;
        const double mx = mean(x);
        const double my = mean(y);
        double sxy = 0, sxx = 0, syy = 0;
        for (std::size_t i = 0; i < x.size(); ++i)
        {
            const double dx = x[i] - mx;
            const double dy = y[i] - my;
            sxy += dx * dy;
            sxx += dx * dx;
            syy += dy * dy;
        }
        if (sxx == 0.0 || syy == 0.0)
            return std::nullopt;
        return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
    }

    std::optional<double> spearman(std::span<const double> x, std::span<const double> y)
    {
        if (x.size() != y.size())
            throw std::invalid_argument("spearman: size mismatch");
        const auto rx = average_ranks(x);
        const auto ry = average_ranks(y);
        return pearson(rx, ry);
    }
}
