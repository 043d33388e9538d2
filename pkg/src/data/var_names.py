"""
This file contains only classes that act as containers for groups of column
names. Use to access groups of related columns of the CSV outputs at once as
well as the group's name.
"""


class VariableSet:
    """Contains set of variables"""
    name = None
    features = None


class spectrum_file(VariableSet):
    name = 'spectrum'
    features = [
        'omega',
        'value',
        'form',
        'beta'
    ]


class diagnostics_file(VariableSet):
    name = 'diagnostics'
    features = [
        't',
        'dt',
        'mass',
        'energy',
        'entropy',
        'min_N',
        'max_N',
        'sup_DN',
        'seminorm_beta',
        'extrapolated_fraction',
        'lp_DN_p0',
        'x_norm',
        'positivity_margin'
    ]


class lemma2_file(VariableSet):
    name = 'lemma2'
    features = [
        'eps',
        'p',
        'data_norm',
        'collision_norm',
        'u_nodes',
        'omega_nodes'
    ]


class index_file(VariableSet):
    name = 'index'
    features = [
        'run_id',
        'overrides',
        'exit_status',
        'error'
    ]


# Headline diagnostics copied from each child run into index.csv
headline_keys = [
    'status',
    'final_time',
    'mass_drift',
    'energy_drift',
    'max_entropy_decrease',
    'smoothing_budget',
    'checks_passed',
    'checks_total',
    'slope',
    'collision_norm',
    'mean',
    'std_error'
]
