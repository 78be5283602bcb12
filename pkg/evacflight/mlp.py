import json

import numpy as np
import pandas as pd
from scipy.special import expit
from sklearn.metrics import accuracy_score, hamming_loss
from sklearn.model_selection import train_test_split

from evacflight.capability import CandidateTable
from evacflight.ef_strings import N_DESTINATIONS, FEATURE_KEYS, \
    EVAC_CAPABILITY_KEY, LABEL_KEYS, DATASET_COLUMNS
from evacflight.fitness import DEFAULT_WEIGHTS
from evacflight.oracle import solve_exhaustive
from evacflight.settings import get_section, MLP_SECTION
from evacflight.util import check_fp, derive_seed, write_json, write_frame

MODEL_FORMAT = "evacflight-mlp"
MODEL_FORMAT_VERSION = 1
ACTIVATION = "sigmoid"

N_FEATURES = 3 * N_DESTINATIONS + 1
INPUT_KEYS = FEATURE_KEYS + (EVAC_CAPABILITY_KEY,)

SGD_OPTIMIZER = "sgd"
ADAM_OPTIMIZER = "adam"
OPTIMIZERS = (SGD_OPTIMIZER, ADAM_OPTIMIZER)

_ADAM_BETA1 = 0.9
_ADAM_BETA2 = 0.999
_ADAM_EPSILON = 1e-8

EXACT_MATCH_KEY = "exact_match"
HAMMING_LOSS_KEY = "hamming_loss"


class DivergenceError(ValueError):
    pass


class EmptyDatasetError(ValueError):
    pass


class MlpModel(object):
    """A trained feedforward network: 31 inputs, sigmoid hidden and output
    layers, 10 outputs.

    Weight matrix l has shape (layer_sizes[l], layer_sizes[l + 1]) so a
    forward step is ``a @ W + b``.  The model is read-only once built.
    """
    def __init__(self, weights, biases, metadata=None):
        if len(weights) != len(biases) or len(weights) < 1:
            raise ValueError("A model needs one bias vector per weight matrix")

        self.weights = [np.array(w, dtype=float) for w in weights]
        self.biases = [np.array(b, dtype=float) for b in biases]
        self.metadata = dict(metadata or {})
        self._validate()

        for arr in self.weights + self.biases:
            arr.flags.writeable = False

    def _validate(self):
        sizes = [w.shape[0] for w in self.weights] + \
            [self.weights[-1].shape[1]]
        if sizes[0] != N_FEATURES or sizes[-1] != N_DESTINATIONS:
            raise ValueError(f"Model must map {N_FEATURES} inputs to "
                             f"{N_DESTINATIONS} outputs, got {sizes}")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.ndim != 2 or b.shape != (w.shape[1],):
                raise ValueError(f"Layer {i} has weights {w.shape} and "
                                 f"biases {b.shape}")
            if i > 0 and w.shape[0] != self.weights[i - 1].shape[1]:
                raise ValueError(f"Layer {i} input width {w.shape[0]} does "
                                 f"not match the previous layer")
            if not (np.isfinite(w).all() and np.isfinite(b).all()):
                raise ValueError(f"Layer {i} has non-finite parameters")

    @property
    def layer_sizes(self):
        return [w.shape[0] for w in self.weights] + \
            [self.weights[-1].shape[1]]

    def predict_proba(self, features):
        """Per-bit probabilities for an (n, 31) feature array"""
        activations, _ = _forward(self.weights, self.biases,
                                  np.atleast_2d(features))
        return activations[-1]

    def to_dict(self):
        return {
            'format': MODEL_FORMAT,
            'version': MODEL_FORMAT_VERSION,
            'layer_sizes': self.layer_sizes,
            'activation': ACTIVATION,
            'weights': [w.tolist() for w in self.weights],
            'biases': [b.tolist() for b in self.biases],
            'metadata': self.metadata}

    @classmethod
    def from_dict(cls, model_dict):
        if model_dict.get('format') != MODEL_FORMAT:
            raise ValueError(f"Not an {MODEL_FORMAT} model file")
        if model_dict.get('version') != MODEL_FORMAT_VERSION:
            raise ValueError(f"Unsupported model format version "
                             f"{model_dict.get('version')}; expected "
                             f"{MODEL_FORMAT_VERSION}")
        model = cls(model_dict['weights'], model_dict['biases'],
                    model_dict.get('metadata'))
        if model.layer_sizes != list(model_dict['layer_sizes']):
            raise ValueError(f"Declared layer sizes "
                             f"{model_dict['layer_sizes']} do not match the "
                             f"weights {model.layer_sizes}")
        return model

    def save(self, fp):
        write_json(self.to_dict(), fp)

    @classmethod
    def load(cls, fp):
        check_fp(fp)
        with open(fp, 'r', encoding='utf-8') as f:
            return cls.from_dict(json.load(f))


def init_parameters(layer_sizes, rng):
    """Xavier-uniform weights and zero biases"""
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return weights, biases


def _forward(weights, biases, X):
    # activations[0] is the input; the last logits are kept for the loss
    activations = [np.asarray(X, dtype=float)]
    logits = None
    for w, b in zip(weights, biases):
        logits = activations[-1] @ w + b
        activations.append(expit(logits))
    return activations, logits


def loss_and_gradients(weights, biases, X, Y):
    """Mean per-bit binary cross-entropy and its gradients.

    Parameters
    ----------
    weights, biases: list of np.ndarray
        Layer parameters.
    X: np.ndarray
        (batch, 31) inputs.
    Y: np.ndarray
        (batch, 10) 0/1 targets.

    Returns
    -------
    (float, list of np.ndarray, list of np.ndarray)
        The loss averaged over the batch and the ten bits, and the gradients
        of every weight matrix and bias vector.
    """
    Y = np.asarray(Y, dtype=float)
    activations, logits = _forward(weights, biases, X)

    # log(1 + e^z) - y*z is the cross-entropy of sigmoid(z), without overflow
    loss = float(np.mean(np.logaddexp(0.0, logits) - Y * logits))

    grad_w = [None] * len(weights)
    grad_b = [None] * len(biases)
    delta = (activations[-1] - Y) / Y.size
    for layer in range(len(weights) - 1, -1, -1):
        grad_w[layer] = activations[layer].T @ delta
        grad_b[layer] = delta.sum(axis=0)
        if layer > 0:
            a = activations[layer]
            delta = (delta @ weights[layer].T) * a * (1.0 - a)
    return loss, grad_w, grad_b


class _Adam(object):
    def __init__(self, params, learning_rate):
        self.learning_rate = learning_rate
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        correction1 = 1.0 - _ADAM_BETA1 ** self.t
        correction2 = 1.0 - _ADAM_BETA2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= _ADAM_BETA1
            m += (1.0 - _ADAM_BETA1) * g
            v *= _ADAM_BETA2
            v += (1.0 - _ADAM_BETA2) * g * g
            p -= self.learning_rate * (m / correction1) / \
                (np.sqrt(v / correction2) + _ADAM_EPSILON)


class _Sgd(object):
    def __init__(self, params, learning_rate):
        self.learning_rate = learning_rate

    def step(self, params, grads):
        for p, g in zip(params, grads):
            p -= self.learning_rate * g


def synthesize_dataset(tables, weights=DEFAULT_WEIGHTS):
    """Label candidate tables with their oracle-best selections.

    Parameters
    ----------
    tables: iterable of CandidateTable
        Tables of every airport except the one held out for evaluation.
    weights: FitnessWeights, optional

    Returns
    -------
    pd.DataFrame
        One row per table (duplicates kept) with columns A1..A30 (the (p, c,
        s) triple of each destination in row order), C and S1..S10.
    """
    records = []
    for table in tables:
        best = solve_exhaustive(table, weights).best_selection
        records.append(np.concatenate([table.features(),
                                       best.astype(float)]))

    if len(records) == 0:
        return pd.DataFrame(columns=list(DATASET_COLUMNS))

    dataset = pd.DataFrame(np.vstack(records), columns=list(DATASET_COLUMNS))
    dataset[list(LABEL_KEYS)] = dataset[list(LABEL_KEYS)].astype(int)
    return dataset


def write_dataset(dataset, fp):
    write_frame(dataset[list(DATASET_COLUMNS)], fp)


def read_dataset(fp):
    """Read a 41-column training CSV.

    Raises
    ------
    ValueError
        If the file is missing or the header isn't A1..A30,C,S1..S10.
    """
    check_fp(fp)
    dataset = pd.read_csv(fp, float_precision='round_trip')
    if list(dataset.columns) != list(DATASET_COLUMNS):
        raise ValueError(f"Dataset '{fp}' must have the columns "
                         f"{','.join(DATASET_COLUMNS)}")
    labels = dataset[list(LABEL_KEYS)]
    if not labels.isin([0, 1]).all().all():
        raise ValueError(f"Dataset '{fp}' has labels other than 0 and 1")
    dataset[list(LABEL_KEYS)] = labels.astype(int)
    return dataset


def dataset_arrays(dataset):
    """(X, Y): the (n, 31) inputs and (n, 10) labels of a dataset"""
    X = dataset[list(INPUT_KEYS)].to_numpy(dtype=float)
    Y = dataset[list(LABEL_KEYS)].to_numpy(dtype=float)
    return X, Y


def table_from_row(row):
    """Rebuild the candidate table a dataset row was made from"""
    return CandidateTable.from_features(
        np.asarray([row[k] for k in INPUT_KEYS], dtype=float))


def split_dataset(dataset, validation_fraction, seed):
    """Shuffled train/validation split; a zero fraction keeps every row for
    training and returns an empty validation frame."""
    if not 0 <= validation_fraction < 1:
        raise ValueError(f"validation_fraction must be in [0, 1), got "
                         f"{validation_fraction}")
    if validation_fraction == 0:
        return dataset.reset_index(drop=True), dataset.iloc[0:0]

    train_df, valid_df = train_test_split(
        dataset, test_size=validation_fraction,
        random_state=derive_seed(seed, 'split'))
    return train_df.reset_index(drop=True), valid_df.reset_index(drop=True)


def train(dataset, epochs, learning_rate, seed, hidden_sizes=(64, 32),
          batch_size=16, optimizer=ADAM_OPTIMIZER):
    """Fit a network to a labeled dataset by mini-batch gradient descent.

    Parameters
    ----------
    dataset: pd.DataFrame
        Output of synthesize_dataset or read_dataset.
    epochs: int
        Passes over the data, at least 1.
    learning_rate: float
    seed: int
        Global seed; initialization and batch order derive from it.
    hidden_sizes: sequence of int, optional
    batch_size: int, optional
    optimizer: str, optional
        'adam' or 'sgd'.

    Returns
    -------
    MlpModel
        With metadata recording the training parameters and the
        epoch-averaged loss curve.

    Raises
    ------
    EmptyDatasetError
        If the dataset has no rows.
    DivergenceError
        If the loss stops being finite; the message names the epoch.
    """
    if len(dataset) == 0:
        raise EmptyDatasetError("Cannot train on an empty dataset")
    if not isinstance(epochs, (int, np.integer)) or epochs < 1:
        raise ValueError(f"epochs must be a positive integer, got {epochs}")
    if not learning_rate > 0:
        raise ValueError(f"learning_rate must be positive, got "
                         f"{learning_rate}")
    if batch_size < 1:
        raise ValueError(f"batch_size must be positive, got {batch_size}")
    if optimizer not in OPTIMIZERS:
        raise ValueError(f"optimizer must be one of {', '.join(OPTIMIZERS)}, "
                         f"got '{optimizer}'")

    X, Y = dataset_arrays(dataset)
    layer_sizes = [N_FEATURES] + [int(h) for h in hidden_sizes] + \
        [N_DESTINATIONS]

    rng = np.random.default_rng(derive_seed(seed, 'nn_init'))
    weights, biases = init_parameters(layer_sizes, rng)
    params = weights + biases
    opt_class = _Adam if optimizer == ADAM_OPTIMIZER else _Sgd
    opt = opt_class(params, learning_rate)

    n_rows = len(X)
    loss_curve = []
    for epoch in range(1, epochs + 1):
        order = rng.permutation(n_rows)
        total = 0.0
        for start in range(0, n_rows, batch_size):
            batch = order[start:start + batch_size]
            loss, grad_w, grad_b = loss_and_gradients(weights, biases,
                                                      X[batch], Y[batch])
            if not np.isfinite(loss):
                raise DivergenceError(f"Training loss became non-finite in "
                                      f"epoch {epoch}")
            total += loss * len(batch)
            opt.step(params, grad_w + grad_b)
        loss_curve.append(total / n_rows)

    metadata = {
        'epochs': int(epochs),
        'learning_rate': float(learning_rate),
        'seed': int(seed),
        'batch_size': int(batch_size),
        'optimizer': optimizer,
        'hidden_sizes': [int(h) for h in hidden_sizes],
        'n_rows': int(n_rows),
        'loss_curve': [float(x) for x in loss_curve]}
    return MlpModel(weights, biases, metadata)


def train_from_settings(dataset, seed, section=None, **overrides):
    """train() with parameters from an 'mlp' settings section"""
    if section is None:
        section = get_section(MLP_SECTION)
    params = {'epochs': section['epochs'],
              'learning_rate': section['learning_rate'],
              'hidden_sizes': tuple(section['hidden_sizes']),
              'batch_size': section['batch_size'],
              'optimizer': section['optimizer']}
    params.update({k: v for k, v in overrides.items() if v is not None})
    return train(dataset, seed=seed, **params)


def predict(model, table):
    """Per-bit probabilities, strictly inside (0, 1), for one table"""
    return model.predict_proba(table.features()[None, :])[0]


def threshold(probabilities):
    return (np.asarray(probabilities) > 0.5).astype(np.uint8)


def sample_individuals(model, table, k, rng):
    """k selections from the network: the thresholded prediction first, then
    k - 1 independent Bernoulli draws from the per-bit probabilities.

    Returns
    -------
    np.ndarray
        (k, 10) uint8 array.
    """
    if k < 1:
        raise ValueError(f"k must be at least 1, got {k}")
    probs = predict(model, table)
    drawn = (rng.random((k - 1, N_DESTINATIONS)) < probs).astype(np.uint8)
    return np.vstack([threshold(probs)[None, :], drawn])


def evaluate(model, dataset):
    """Exact-match rate (all ten bits right) and per-bit error on a dataset"""
    X, Y = dataset_arrays(dataset)
    predicted = threshold(model.predict_proba(X))
    truth = Y.astype(np.uint8)
    return {EXACT_MATCH_KEY: float(accuracy_score(truth, predicted)),
            HAMMING_LOSS_KEY: float(hamming_loss(truth, predicted))}
