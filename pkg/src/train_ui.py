import os

import gradio as gr

import pipeline_utils
from attention_utils import MODEL_VARIANTS, ModelConfig
from errors import RqaError
from train_utils import TrainConfig


def auto_fill_output(data, model):
    """
        Propose an output folder next to the data: <data folder>/runs/<model>.
    """
    if not data:
        return ''
    data = os.path.normpath(data)
    folder = data if os.path.isdir(data) else os.path.dirname(data)
    return os.path.join(folder, 'runs', model or 'model')


def format_metrics(metrics):
    lines = [f'accuracy: {metrics.accuracy:.4f} ({metrics.count} examples)']
    if metrics.exact_match is not None:
        lines.append(f'exact match: {metrics.exact_match:.4f} ({metrics.question_count} questions)')
    lines.append('confusion (rows gold, columns predicted):')
    lines.extend('  ' + ' '.join(f'{v:5d}' for v in row) for row in metrics.confusion)
    return '\n'.join(lines)


def train_model(data, task, model, k, rho_lex, rho_opt, hidden, embedding_dim, extra_embedding, epochs, lr, batch,
                seed, out_folder):
    """
        Train from the UI and return the console text.
    """
    try:
        model_config = ModelConfig(variant=model, task=task, hidden_size=int(hidden), embedding_dim=int(embedding_dim),
                                   k=int(k), rho_lex=float(rho_lex), rho_opt=float(rho_opt),
                                   use_extra_embedding=bool(extra_embedding))
        train_config = TrainConfig(epochs=int(epochs), lr=float(lr), batch_size=int(batch), seed=int(seed))
        result = pipeline_utils.train_main(data, model_config, train_config, out_folder)
    except (RqaError, OSError) as e:
        return f'Error: {e}'

    return '\n'.join([f'Checkpoint written to {result.checkpoint_path}',
                      f'Metrics on {result.evaluated_on} written to {result.metrics_path}',
                      format_metrics(result.metrics)])


def create_train_interface():
    with gr.Blocks() as interface:
        train_readme_text = '''
                This tab trains one model. Point it to a folder holding train.jsonl (and test.jsonl to get
                test metrics) and choose the output folder.
            '''
        gr.Markdown(label='What is this tab about?', value=train_readme_text)

        with gr.Row(equal_height=True):
            with gr.Column():
                data = gr.Textbox(label='Data', info='Folder with train.jsonl / test.jsonl, or one JSONL file')
                task = gr.Radio(label='Question type', choices=['tf', 'mc'], value='tf')
                model = gr.Dropdown(label='Model', choices=list(MODEL_VARIANTS), value='semi-ian')

                with gr.Accordion('Model settings', open=False):
                    k = gr.Dropdown(label='k', choices=[1, 2, 4, 8, 16], value=1)
                    rho_lex = gr.Slider(label='rho (lexical)', minimum=0.1, maximum=1.0, step=0.1, value=1.0)
                    rho_opt = gr.Slider(label='rho (option)', minimum=0.1, maximum=1.0, step=0.1, value=1.0)
                    hidden = gr.Number(label='Hidden size', value=64, precision=0)
                    embedding_dim = gr.Number(label='Word embedding size', value=300, precision=0)
                    extra_embedding = gr.Checkbox(label='Use lexical and option embeddings', value=True)

                with gr.Accordion('Training settings', open=False):
                    epochs = gr.Number(label='Epochs', value=30, precision=0)
                    lr = gr.Number(label='Learning rate', value=1e-3)
                    batch = gr.Number(label='Batch size', value=32, precision=0)
                    seed = gr.Number(label='Seed', value=0, precision=0)

                with gr.Row():
                    out_folder = gr.Textbox(label='Output Folder', scale=70,
                                            info='Click "Auto-path" to put it under <data>/runs/<model>.')
                    auto_path_btn = gr.Button('Auto-path')

                submit_button = gr.Button('Train')

            with gr.Column():
                out = gr.TextArea(label='Output Console')

        auto_path_btn.click(fn=auto_fill_output, inputs=[data, model], outputs=out_folder)
        submit_button.click(fn=train_model,
                            inputs=[data, task, model, k, rho_lex, rho_opt, hidden, embedding_dim, extra_embedding,
                                    epochs, lr, batch, seed, out_folder],
                            outputs=out)

    return interface
