#include <math.h>
#include <stdio.h>
#include <string.h>

#include "recourse_qaoa.h"

#define CHECK(cond)                                                        \
    do {                                                                   \
        if (!(cond)) {                                                     \
            const char *e = rq_last_error();                               \
            fprintf(stderr, "%s:%d: %s (%s)\n", __FILE__, __LINE__, #cond, \
                    e ? e : "no error");                                   \
            return 1;                                                      \
        }                                                                  \
    } while (0)

int main(int argc, char **argv) {
    CHECK(argc == 2);
    RqInstance *inst = NULL;
    CHECK(rq_instance_from_file(argv[1], &inst) == RQ_STATUS_OK);

    int64_t j = 2;
    double z = 0.0;
    CHECK(rq_expected_cost(inst, &j, 1, &z) == RQ_STATUS_OK);
    CHECK(fabs(z + 0.45) < 1e-9);

    char *json = NULL;
    CHECK(rq_solve_exact_json(inst, &json) == RQ_STATUS_OK);
    CHECK(strstr(json, "\"hn_j\":[2]") != NULL);
    rq_string_free(json);

    RqQaoaConfig *cfg = rq_config_new();
    CHECK(rq_config_set_layers(cfg, 1) == RQ_STATUS_OK);
    CHECK(rq_config_set_max_evaluations(cfg, 10) == RQ_STATUS_OK);
    RqRunResult *res = NULL;
    CHECK(rq_qaoa_run(inst, cfg, &res) == RQ_STATUS_OK);
    size_t evals = 0;
    CHECK(rq_run_evaluations(res, &evals) == RQ_STATUS_OK);
    CHECK(evals >= 1 && evals <= 10);

    RqInstance *bad = NULL;
    CHECK(rq_instance_from_str("horizon = ", &bad) == RQ_STATUS_PARSE);
    CHECK(rq_last_error() != NULL);

    rq_run_result_free(res);
    rq_config_free(cfg);
    rq_instance_free(inst);
    puts("ok");
    return 0;
}
