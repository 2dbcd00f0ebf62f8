#include "rdrive/planner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rdrive::planner {

namespace {

void checkPair(int k, int n) {
    if (k < 1 || k > n) {
        raise(Errc::InvalidParameters,
              "need 1 <= k <= n, got k=" + std::to_string(k) + " n=" + std::to_string(n));
    }
}

void checkWeight(double wa) {
    if (!(wa >= 0.0 && wa <= 1.0)) {
        raise(Errc::InvalidParameters, "availability weight must be in [0, 1]");
    }
}

// One binomial pmf term C(n,i) p^i (1-p)^(n-i). Direct products are exact
// enough up to n ~ 40; beyond that everything moves to log space.
double binomialTerm(int n, int i, double p) {
    if (p == 0.0) return i == 0 ? 1.0 : 0.0;
    if (p == 1.0) return i == n ? 1.0 : 0.0;
    if (n <= 40) {
        double coefficient = 1.0;
        for (int j = 1; j <= i; ++j) {
            coefficient *= static_cast<double>(n - i + j) / static_cast<double>(j);
        }
        return coefficient * std::pow(p, i) * std::pow(1.0 - p, n - i);
    }
    const double logCoefficient =
        std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0);
    return std::exp(logCoefficient + i * std::log(p) + (n - i) * std::log1p(-p));
}

// Availability of one device for a required lifetime, tolerating T = 0 (all
// devices trivially cover a zero lifetime); the public operation rejects
// non-positive T.
double availabilityLenient(double remainingTimeMin, double requiredLifetimeMin) {
    if (remainingTimeMin >= requiredLifetimeMin) return 1.0;
    if (remainingTimeMin <= 0.0) return 0.0;
    return remainingTimeMin / requiredLifetimeMin;
}

}  // namespace

double cost(int k, int n, double availabilityWeight) {
    checkPair(k, n);
    checkWeight(availabilityWeight);
    const double rate = static_cast<double>(k) / n;
    return availabilityWeight * rate + (1.0 - availabilityWeight) / rate;
}

double systemAvailability(int k, int n, double deviceAvailability) {
    checkPair(k, n);
    if (!(deviceAvailability >= 0.0 && deviceAvailability <= 1.0)) {
        raise(Errc::InvalidParameters, "device availability must be in [0, 1]");
    }
    double total = 0.0;
    for (int i = k; i <= n; ++i) total += binomialTerm(n, i, deviceAvailability);
    return std::clamp(total, 0.0, 1.0);
}

double deviceAvailability(double remainingTimeMin, double requiredLifetimeMin) {
    if (remainingTimeMin < 0.0) raise(Errc::InvalidParameters, "remaining time must be non-negative");
    if (requiredLifetimeMin <= 0.0) raise(Errc::InvalidParameters, "required lifetime must be positive");
    return availabilityLenient(remainingTimeMin, requiredLifetimeMin);
}

double meanDeviceAvailability(std::span<const DeviceProfile> devices, double requiredLifetimeMin) {
    if (devices.empty()) raise(Errc::InvalidParameters, "device list is empty");
    double total = 0.0;
    for (const auto& device : devices) {
        total += requiredLifetimeMin <= 0.0
                     ? 1.0
                     : availabilityLenient(device.remainingTimeMin, requiredLifetimeMin);
    }
    return total / static_cast<double>(devices.size());
}

CostLowerBound costLowerBound(double availabilityWeight, int deviceCount) {
    checkWeight(availabilityWeight);
    if (deviceCount < 1) raise(Errc::InvalidParameters, "device count must be at least 1");
    const double lowestRate = 1.0 / deviceCount;
    double rate;
    if (availabilityWeight <= 0.0) {
        rate = 1.0;  // pure storage cost, minimized at rate 1
    } else if (availabilityWeight >= 1.0) {
        rate = lowestRate;  // pure availability cost, minimized at the lowest rate
    } else {
        rate = std::sqrt((1.0 - availabilityWeight) / availabilityWeight);
        rate = std::clamp(rate, lowestRate, 1.0);
    }
    const double value = availabilityWeight * rate + (1.0 - availabilityWeight) / rate;
    return {value, rate};
}

CodingPlan plan(const PlannerInputs& inputs) {
    checkWeight(inputs.availabilityWeight);
    if (inputs.fileSizeMb <= 0.0) raise(Errc::InvalidParameters, "file size must be positive");
    if (inputs.requiredLifetimeMin < 0.0) raise(Errc::InvalidParameters, "required lifetime must be non-negative");
    if (inputs.devices.empty()) raise(Errc::InvalidParameters, "no candidate devices");

    const int deviceCount = static_cast<int>(inputs.devices.size());
    const double fileSize = inputs.fileSizeMb;
    const double lifetime = inputs.requiredLifetimeMin;

    // Order statistics over the candidate pool: storageDesc[i] is the
    // (i+1)-th largest storage, timeDesc[i] the (i+1)-th longest remaining time.
    std::vector<double> storageDesc(inputs.devices.size());
    std::vector<double> timeDesc(inputs.devices.size());
    std::transform(inputs.devices.begin(), inputs.devices.end(), storageDesc.begin(),
                   [](const DeviceProfile& d) { return d.storageAvailableMb; });
    std::transform(inputs.devices.begin(), inputs.devices.end(), timeDesc.begin(),
                   [](const DeviceProfile& d) { return d.remainingTimeMin; });
    std::sort(storageDesc.rbegin(), storageDesc.rend());
    std::sort(timeDesc.rbegin(), timeDesc.rend());

    const double meanAvailability = meanDeviceAvailability(inputs.devices, lifetime);

    int bestK = 0;
    int bestN = 0;
    double bestCost = 0.0;
    double bestAvailability = 0.0;
    bool anyStorageOk = false;
    bool anyLifetimeOk = false;

    for (int nGuess = 1; nGuess <= deviceCount; ++nGuess) {
        for (int kGuess = 1; kGuess <= nGuess; ++kGuess) {
            const bool storageOk = fileSize / kGuess <= storageDesc[static_cast<size_t>(nGuess - 1)];
            const bool lifetimeOk = lifetime <= timeDesc[static_cast<size_t>(kGuess - 1)];
            anyStorageOk = anyStorageOk || storageOk;
            anyLifetimeOk = anyLifetimeOk || lifetimeOk;
            if (!storageOk || !lifetimeOk) continue;

            const double pairCost = cost(kGuess, nGuess, inputs.availabilityWeight);
            if (bestK == 0 || pairCost < bestCost) {
                bestK = kGuess;
                bestN = nGuess;
                bestCost = pairCost;
                bestAvailability = systemAvailability(kGuess, nGuess, meanAvailability);
                continue;
            }
            // Same code rate: keep the pair with strictly larger system
            // availability; first-visited wins ties.
            if (static_cast<int64_t>(kGuess) * bestN == static_cast<int64_t>(bestK) * nGuess) {
                const double pairAvailability = systemAvailability(kGuess, nGuess, meanAvailability);
                if (pairAvailability > bestAvailability) {
                    bestK = kGuess;
                    bestN = nGuess;
                    bestAvailability = pairAvailability;
                }
            }
        }
    }

    if (bestK == 0) {
        std::string binding;
        if (!anyStorageOk && !anyLifetimeOk) {
            binding = "storage and lifetime constraints";
        } else if (!anyStorageOk) {
            binding = "storage constraint (F/k exceeds available device storage)";
        } else if (!anyLifetimeOk) {
            binding = "lifetime constraint (no device covers the required lifetime)";
        } else {
            binding = "joint storage/lifetime constraints";
        }
        raise(Errc::NoFeasiblePlan, "no (k, n) satisfies the " + binding);
    }

    // Device selection: devices with room strictly beyond F/k, longest
    // remaining time first. The strict filter can come up short only when
    // some storage equals F/k exactly; the feasibility check guarantees at
    // least n devices at >= F/k, so those fill the remainder.
    const double loadMb = fileSize / bestK;
    std::vector<size_t> candidates;
    for (size_t i = 0; i < inputs.devices.size(); ++i) {
        if (inputs.devices[i].storageAvailableMb > loadMb) candidates.push_back(i);
    }
    if (candidates.size() < static_cast<size_t>(bestN)) {
        for (size_t i = 0; i < inputs.devices.size(); ++i) {
            if (inputs.devices[i].storageAvailableMb == loadMb) candidates.push_back(i);
        }
    }
    std::stable_sort(candidates.begin(), candidates.end(), [&](size_t a, size_t b) {
        return inputs.devices[a].remainingTimeMin > inputs.devices[b].remainingTimeMin;
    });
    if (candidates.size() < static_cast<size_t>(bestN)) {
        raise(Errc::NoFeasiblePlan, "storage filter left fewer than n devices");
    }

    CodingPlan result;
    result.k = bestK;
    result.n = bestN;
    result.cost = bestCost;
    result.codeRate = static_cast<double>(bestK) / bestN;
    result.encodedSizeMb = fileSize * bestN / bestK;
    result.devices.reserve(static_cast<size_t>(bestN));
    for (int i = 0; i < bestN; ++i) {
        result.devices.push_back(inputs.devices[candidates[static_cast<size_t>(i)]].guid);
    }
    return result;
}

}  // namespace rdrive::planner
