#pragma once

#include <span>
#include <vector>

#include "rdrive/types.hpp"

// Adaptive erasure-code rate selection: weighted availability/storage cost
// model, binomial system-availability model, and the (k, n) + device search.
namespace rdrive::planner {

struct PlannerInputs {
    double fileSizeMb = 0.0;          // F
    double requiredLifetimeMin = 0.0; // T
    double availabilityWeight = 0.0;  // w_a in [0, 1]
    std::vector<DeviceProfile> devices;
};

// C(k, n, w_a) = w_a * k/n + (1 - w_a) * n/k
double cost(int k, int n, double availabilityWeight);

// A(k, n, p) = sum_{i=k..n} C(n, i) p^i (1-p)^(n-i)
double systemAvailability(int k, int n, double deviceAvailability);

// p_i: 1 if T_i >= T, T_i/T if 0 < T_i < T, 0 at T_i = 0.
double deviceAvailability(double remainingTimeMin, double requiredLifetimeMin);

double meanDeviceAvailability(std::span<const DeviceProfile> devices, double requiredLifetimeMin);

struct CostLowerBound {
    double cost = 0.0;
    double codeRate = 0.0;
};

// Continuous-rate minimum of the cost over r in [1/N, 1].
CostLowerBound costLowerBound(double availabilityWeight, int deviceCount);

// Searches all integer (k', n') with 1 <= k' <= n' <= N, keeps pairs whose
// per-device storage load fits the n'-th largest storage and whose lifetime
// requirement fits the k'-th longest remaining time, picks the minimum-cost
// pair (equal code rates broken by system availability at the mean device
// availability), then fills the device list with the n longest-lived devices
// that have room for F/k. Throws NoFeasiblePlan naming the binding
// constraint when no pair survives.
CodingPlan plan(const PlannerInputs& inputs);

}  // namespace rdrive::planner
