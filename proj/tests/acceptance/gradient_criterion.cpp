#include <chrono>
#include <string>

#include "grad_cases.hpp"

// Runs every op check and the total-loss slices in double precision.
// Returns true when all pass; `detail` summarises counts, worst excess and failures.
bool run_gradient_criterion(std::string* detail, double* seconds) {
    const auto t0 = std::chrono::steady_clock::now();
    int n = 0, failed = 0;
    double worst = -1e300;
    std::string failures;
    auto run_all = [&](const std::vector<cbct_test::GradCase>& cases) {
        for (const auto& c : cases) {
            const auto rep = c.run();
            ++n;
            worst = std::max(worst, rep.worst_excess);
            if (!rep.ok) {
                ++failed;
                failures += " [" + c.name + ": " + rep.detail + "]";
            }
        }
    };
    run_all(cbct_test::op_grad_cases());
    const int n_ops = n;
    run_all(cbct_test::total_loss_grad_cases());
    *seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    char buf[160];
    std::snprintf(buf, sizeof buf, "%d op checks + %d total-loss slices, %d failed, worst excess %.3g", n_ops,
                  n - n_ops, failed, worst);
    *detail = buf + failures;
    return failed == 0;
}
