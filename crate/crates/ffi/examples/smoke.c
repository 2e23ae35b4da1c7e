#include <stdio.h>
#include "mpes.h"

int main(void) {
    MpesDeviceParams p = mpes_device_params_default();
    double r = 0.0, n = 0.0;
    if (mpes_resistance_after_pulses(p, 2.0, 0.1, &r) != MPES_STATUS_OK) return 1;
    if (mpes_pulse_count_from_resistance(p, r, 0.1, &n) != MPES_STATUS_OK) return 1;
    if (mpes_resistance_after_pulses(p, 0.5, 0.1, &r) != MPES_STATUS_DOMAIN) return 1;
    printf("n=%.12f err=%s\n", n, mpes_last_error());
    MpesConfig *cfg = mpes_config_new();
    mpes_config_set(cfg, "neurons", "5");
    mpes_config_set(cfg, "sim_time", "0.5");
    mpes_config_set(cfg, "learn_time", "0.3");
    MpesRunResult *res = NULL;
    if (mpes_run(cfg, &res) != MPES_STATUS_OK) return 1;
    MpesMetrics m;
    mpes_run_metrics(res, &m);
    printf("mse=%f\n", m.mse);
    mpes_run_result_free(res);
    mpes_config_free(cfg);
    return 0;
}
