"""Closed-form, bound and asymptotic performance of THz multihop and mixed links."""

from .common import (Direction, EvalResult, MixedConfig, MultihopConfig,
                     ProbabilityRangeError, Relaying, check_probability, hop_psi)
from .multihop import (ca_cdf, ca_cdf_special, ca_diversity_exact, ca_outage_asymptotic,
                       ca_pdf, diversity_multihop, fg_bound_diversity, fg_cdf, fg_moment,
                       fg_moment_special, fg_outage_asymptotic, fg_pdf)
from .ber import avg_ber_from_cdf, ca_avg_ber, fg_avg_ber, fg_ber_spec, rayleigh_dbpsk_ber
from .access import (access_avg_ber, access_cdf_asymptotic, access_diversity_exact,
                     access_diversity_formula)
from .mixed import (dl_avg_ber, dl_cdf, dl_diversity, dl_diversity_exact, dl_outage_asymptotic,
                    dl_pdf, psi_fixed_gain, uplink_avg_ber, uplink_diversity,
                    uplink_diversity_exact, uplink_outage, uplink_outage_asymptotic)
