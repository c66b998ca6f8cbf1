import sys
from typing import List, Optional

import click
import typer
from rich.console import Console
from rich.table import Table

import pipeline_utils as pipeline
from attention_utils import MODEL_VARIANTS, ModelConfig
from errors import ConfigError, RqaError
from log_utils import setup_logging
from text_utils import LABEL_NAMES, sniff_task
from train_utils import ABLATION_VARIANTS, TrainConfig

app = typer.Typer(add_completion=False, no_args_is_help=True,
                  help='Answer understanding for reverse-QA: train, evaluate and try out answer classifiers.')

console = Console()
err_console = Console(stderr=True)


@app.callback()
def main(verbose: bool = typer.Option(False, '--verbose', '-v', help='Show debug messages.'),
         quiet: bool = typer.Option(False, '--quiet', '-q', help='Only show warnings and errors.')):
    setup_logging('DEBUG' if verbose else 'WARNING' if quiet else 'INFO')


def _run(action):
    try:
        return action()
    except (RqaError, OSError) as e:
        err_console.print(f'Error: {e}', markup=False, highlight=False)
        raise typer.Exit(code=1)


def _check_data_task(data, task):
    if task not in ('tf', 'mc'):
        raise typer.BadParameter(f'expected tf or mc, got {task!r}', param_hint='--task')
    try:
        paths = [path for path in pipeline.resolve_data(data) if path]
    except OSError:
        # reported as a file error by the command itself
        return
    for path in paths:
        found = sniff_task(path)
        if found is not None and found != task:
            raise typer.BadParameter(f'{path} holds {found.upper()} rows', param_hint='--task')


def _model_config(model, task, k, rho_lex, rho_opt, hidden, embedding_dim, extra_embedding, candidate, dropout,
                  input_mode, option_match=True):
    if model not in MODEL_VARIANTS:
        raise typer.BadParameter(f'expected one of {", ".join(MODEL_VARIANTS)}', param_hint='--model')
    try:
        return ModelConfig(variant=model, task=task, hidden_size=hidden, embedding_dim=embedding_dim, k=k,
                           rho_lex=rho_lex, rho_opt=rho_opt, use_extra_embedding=extra_embedding,
                           candidate_activation=candidate, dropout=dropout, input_mode=input_mode,
                           option_match=option_match)
    except ConfigError as e:
        raise typer.BadParameter(str(e))


def _train_config(**kwargs):
    try:
        return TrainConfig(**{key: value for key, value in kwargs.items() if value is not None})
    except ConfigError as e:
        raise typer.BadParameter(str(e))


def _print_metrics(metrics, title):
    table = Table(title=title)
    table.add_column('class')
    table.add_column('precision', justify='right')
    table.add_column('recall', justify='right')
    for c, name in enumerate(LABEL_NAMES):
        table.add_row(name, f'{metrics.precision[c]:.4f}', f'{metrics.recall[c]:.4f}')
    console.print(table)

    line = f'accuracy {metrics.accuracy:.4f} on {metrics.count} examples'
    if metrics.exact_match is not None:
        line += f', exact match {metrics.exact_match:.4f} on {metrics.question_count} questions'
    console.print(line, highlight=False)


def _print_frame(frame, title):
    table = Table(title=title)
    for column in frame.columns:
        table.add_column(str(column))
    for row in frame.itertuples(index=False):
        table.add_row(*[f'{value:.4f}' if isinstance(value, float) else str(value) for value in row])
    console.print(table)


# Shared option declarations

DATA = typer.Option(..., '--data', help='Folder with train.jsonl / test.jsonl, or one JSONL file.')
TASK = typer.Option('tf', '--task', help='tf or mc.')
MODEL = typer.Option('semi-ian', '--model', help=f'One of {", ".join(MODEL_VARIANTS)}.')
K = typer.Option(1, '--k', help='Block size of the rho-hot encodings.')
RHO_LEX = typer.Option(1.0, '--rho-lex', help='Value of the lexical embedding blocks.')
RHO_OPT = typer.Option(1.0, '--rho-opt', help='Value of the option embedding blocks.')
HIDDEN = typer.Option(64, '--hidden', help='LSTM hidden size.')
EMBEDDING_DIM = typer.Option(300, '--embedding-dim', help='Word embedding dimension.')
EXTRA = typer.Option(True, '--extra-embedding/--no-extra-embedding',
                     help='Use the lexical and option embeddings.')
OPTION_MATCH = typer.Option(True, '--option-match/--no-option-match',
                            help='Multiple choice: mark answer words that occur in the option under consideration.')
CANDIDATE = typer.Option('tanh', '--candidate', help='Candidate activation of the LSTM: tanh or sigmoid.')
DROPOUT = typer.Option(0.2, '--dropout', help='Dropout before the softmax head.')
INPUT_MODE = typer.Option('a', '--input-mode', help='Baselines only: a (answer) or aq (question + answer).')
EPOCHS = typer.Option(None, '--epochs', help='Maximum epochs (default 30).')
LR = typer.Option(None, '--lr', help='Learning rate (default 1e-3).')
BATCH = typer.Option(None, '--batch', help='Batch size (default 32).')
SEED = typer.Option(0, '--seed', help='Random seed.')
OPTIMIZER = typer.Option(None, '--optimizer', help='adam or sgd.')
PATIENCE = typer.Option(None, '--patience', help='Epochs without improvement before stopping.')
HOLDOUT = typer.Option(None, '--holdout', help='Held-out fraction of the training data for model selection.')
MIN_COUNT = typer.Option(None, '--min-count', help='Keep tokens seen more than this many times.')
FREEZE = typer.Option(False, '--freeze-embeddings', help='Do not update the word embeddings.')
LEXICON = typer.Option(None, '--lexicon', help='Lexicon JSON file.')
EMBEDDINGS = typer.Option(None, '--embeddings', help='Pretrained word vectors in text format.')


@app.command()
def gensynth(task: str = TASK,
             n_train: int = typer.Option(2000, '--train', help='Number of training rows.'),
             n_test: int = typer.Option(500, '--test', help='Number of test rows.'),
             seed: int = SEED,
             out: str = typer.Option(..., '--out', help='Output folder.')):
    """Generate a synthetic train/test corpus."""
    if task not in ('tf', 'mc'):
        raise typer.BadParameter(f'expected tf or mc, got {task!r}', param_hint='--task')

    paths = _run(lambda: pipeline.gensynth_main(task, n_train, n_test, seed, out))
    for path in paths:
        console.print(f'Wrote {path}', highlight=False)


@app.command()
def train(data: str = DATA, task: str = TASK, model: str = MODEL, k: int = K, rho_lex: float = RHO_LEX,
          rho_opt: float = RHO_OPT, hidden: int = HIDDEN, embedding_dim: int = EMBEDDING_DIM,
          extra_embedding: bool = EXTRA, option_match: bool = OPTION_MATCH, candidate: str = CANDIDATE,
          dropout: float = DROPOUT, input_mode: str = INPUT_MODE, epochs: Optional[int] = EPOCHS,
          lr: Optional[float] = LR, batch: Optional[int] = BATCH, seed: int = SEED,
          optimizer: Optional[str] = OPTIMIZER, patience: Optional[int] = PATIENCE, holdout: Optional[float] = HOLDOUT,
          min_count: Optional[int] = MIN_COUNT, freeze_embeddings: bool = FREEZE,
          lexicon: Optional[str] = LEXICON, embeddings: Optional[str] = EMBEDDINGS,
          rules: Optional[str] = typer.Option(None, '--rules', help='Rule table JSON for the rule baseline.'),
          out: str = typer.Option(..., '--out', help='Output folder for checkpoint.json and metrics.tsv.')):
    """Train a model and save its checkpoint and metrics."""
    _check_data_task(data, task)
    model_config = _model_config(model, task, k, rho_lex, rho_opt, hidden, embedding_dim, extra_embedding,
                                 candidate, dropout, input_mode, option_match)
    train_config = _train_config(epochs=epochs, lr=lr, batch_size=batch, seed=seed, optimizer=optimizer,
                                 patience=patience, holdout_fraction=holdout, min_count=min_count,
                                 freeze_embeddings=freeze_embeddings)

    result = _run(lambda: pipeline.train_main(data, model_config, train_config, out, lexicon, embeddings, rules))
    _print_metrics(result.metrics, f'{model} on {result.evaluated_on}')
    console.print(f'Checkpoint: {result.checkpoint_path}\nMetrics: {result.metrics_path}', highlight=False)


@app.command('eval')
def eval_command(data: str = DATA,
                 checkpoint: List[str] = typer.Option(..., '--checkpoint', help='Checkpoint file (repeatable).'),
                 out: Optional[str] = typer.Option(None, '--out', help='Folder for accuracy.tsv and metrics.')):
    """Evaluate checkpoints on a dataset (its test split for a folder)."""
    table, all_metrics = _run(lambda: pipeline.eval_main(data, checkpoint, out))

    for path, metrics in zip(checkpoint, all_metrics):
        _print_metrics(metrics, path)
    _print_frame(table, 'Accuracy')


@app.command()
def predict(data: str = DATA,
            checkpoint: str = typer.Option(..., '--checkpoint', help='Checkpoint file.'),
            out: str = typer.Option(..., '--out', help='Output JSONL file.')):
    """Write predictions as JSON lines."""
    count = _run(lambda: pipeline.predict_main(data, checkpoint, out))
    console.print(f'Wrote {count} predictions to {out}', highlight=False)


@app.command()
def gridsearch(data: str = DATA, task: str = TASK, model: str = MODEL, rho_opt: float = RHO_OPT,
               hidden: int = HIDDEN, embedding_dim: int = EMBEDDING_DIM, candidate: str = CANDIDATE,
               dropout: float = DROPOUT, epochs: Optional[int] = EPOCHS, lr: Optional[float] = LR,
               batch: Optional[int] = BATCH, seed: int = SEED, optimizer: Optional[str] = OPTIMIZER,
               patience: Optional[int] = PATIENCE, holdout: Optional[float] = HOLDOUT,
               min_count: Optional[int] = MIN_COUNT, lexicon: Optional[str] = LEXICON,
               embeddings: Optional[str] = EMBEDDINGS,
               subsample: Optional[int] = typer.Option(None, '--subsample', help='Evaluate this many grid points.'),
               jobs: int = typer.Option(1, '--jobs', help='Worker processes.'),
               out: Optional[str] = typer.Option(None, '--out', help='Folder for grid.tsv.')):
    """Search k and rho over the standard grid."""
    _check_data_task(data, task)
    model_config = _model_config(model, task, 1, 1.0, rho_opt, hidden, embedding_dim, True, candidate, dropout, 'a')
    train_config = _train_config(epochs=epochs, lr=lr, batch_size=batch, seed=seed, optimizer=optimizer,
                                 patience=patience, holdout_fraction=holdout, min_count=min_count,
                                 grid_subsample=subsample, jobs=jobs)

    report = _run(lambda: pipeline.gridsearch_main(data, model_config, train_config, out, lexicon, embeddings))
    _print_frame(report.table, f'Grid search ({len(report.table)} points)')
    if report.best is None:
        err_console.print('Error: every grid point failed')
        raise typer.Exit(code=1)
    console.print(f'Best: k={report.best["k"]} rho_lex={report.best["rho_lex"]} rho_opt={report.best["rho_opt"]} '
                  f'held-out accuracy {report.best["heldout_accuracy"]:.4f}', highlight=False)


@app.command()
def ablation(data: str = DATA, task: str = TASK,
             model: List[str] = typer.Option(list(ABLATION_VARIANTS), '--model', help='Models to ablate (repeatable).'),
             k: int = K, rho_lex: float = RHO_LEX, rho_opt: float = RHO_OPT, hidden: int = HIDDEN,
             embedding_dim: int = EMBEDDING_DIM, candidate: str = CANDIDATE, dropout: float = DROPOUT,
             epochs: Optional[int] = EPOCHS, lr: Optional[float] = LR, batch: Optional[int] = BATCH,
             seed: int = SEED, optimizer: Optional[str] = OPTIMIZER, patience: Optional[int] = PATIENCE,
             holdout: Optional[float] = HOLDOUT, min_count: Optional[int] = MIN_COUNT,
             lexicon: Optional[str] = LEXICON, embeddings: Optional[str] = EMBEDDINGS,
             out: Optional[str] = typer.Option(None, '--out', help='Folder for ablation.tsv.')):
    """Compare models with (W) and without (O) the lexical and option embeddings."""
    _check_data_task(data, task)
    for variant in model:
        if variant not in MODEL_VARIANTS or not ModelConfig(variant=variant).is_neural:
            raise typer.BadParameter(f'{variant} is not a neural model', param_hint='--model')

    model_config = _model_config(model[0], task, k, rho_lex, rho_opt, hidden, embedding_dim, True, candidate,
                                 dropout, 'a')
    train_config = _train_config(epochs=epochs, lr=lr, batch_size=batch, seed=seed, optimizer=optimizer,
                                 patience=patience, holdout_fraction=holdout, min_count=min_count)

    table = _run(lambda: pipeline.ablation_main(data, model_config, train_config, out, tuple(model), lexicon,
                                                embeddings))
    _print_frame(table, 'Ablation')


@app.command()
def gradcheck(model: List[str] = typer.Option(list(pipeline.GRADCHECK_VARIANTS), '--model',
                                              help='Models to check (repeatable).'),
              task: str = TASK, seed: int = SEED,
              tol: float = typer.Option(1e-4, '--tol', help='Largest accepted relative error.')):
    """Compare analytic and finite-difference gradients on a toy instance."""
    if task not in ('tf', 'mc'):
        raise typer.BadParameter(f'expected tf or mc, got {task!r}', param_hint='--task')
    for variant in model:
        if variant not in MODEL_VARIANTS or not ModelConfig(variant=variant).is_neural:
            raise typer.BadParameter(f'{variant} is not a neural model', param_hint='--model')

    reports = _run(lambda: pipeline.gradcheck_main(tuple(model), task=task, seed=seed, tol=tol))

    table = Table(title='Gradient check')
    for column in ('model', 'parameter', 'size', 'max rel. error', 'result'):
        table.add_column(column)
    for variant, report in reports:
        for entry in report.entries:
            table.add_row(variant, entry.name, str(entry.size), f'{entry.max_rel_error:.2e}',
                          'pass' if entry.passed else 'FAIL')
    console.print(table)

    if not all(report.passed for _, report in reports):
        err_console.print('Error: gradient check failed')
        raise typer.Exit(code=1)
    console.print('All parameter groups pass', highlight=False)


@app.command()
def demo(checkpoint: str = typer.Option(..., '--checkpoint', help='Checkpoint file.'),
         question: Optional[str] = typer.Option(None, '--question', help='The question asked.'),
         options: Optional[str] = typer.Option(None, '--options', help='Comma-separated options (multiple choice).')):
    """Ask one question and classify every answer typed on standard input."""
    if question is None:
        question = typer.prompt('Question')
    option_list = options.split(',') if options else None

    session = _run(lambda: pipeline.DemoSession(checkpoint, question, option_list))
    console.print(f'Question: {question}\nType an answer per line, an empty line ends the session.',
                  highlight=False, markup=False)

    while True:
        console.print('answer> ', end='', highlight=False, markup=False)
        line = sys.stdin.readline()
        if not line.strip():
            break
        result = _run(lambda: session.classify(line))
        console.print(session.format(result), highlight=False, markup=False)


def run(argv=None):
    """
        Run the command line with `argv` (defaults to sys.argv) and return the exit code.
    """
    try:
        result = app(args=argv, prog_name='main.py', standalone_mode=False)
    except click.ClickException as e:
        e.show()
        return e.exit_code
    except click.Abort:
        return 1
    return result if isinstance(result, int) else 0
