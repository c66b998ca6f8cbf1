import gradio as gr

import pipeline_utils
from errors import RqaError
from train_ui import format_metrics


def evaluate_checkpoints(data, checkpoints, out_folder):
    """
        Evaluate newline-separated checkpoint paths and return the console text.
    """
    paths = [line.strip() for line in (checkpoints or '').splitlines() if line.strip()]
    try:
        table, all_metrics = pipeline_utils.eval_main(data, paths, out_folder or None)
    except (RqaError, OSError) as e:
        return f'Error: {e}'

    blocks = [table.to_string(index=False, float_format='%.4f')]
    for path, metrics in zip(paths, all_metrics):
        blocks.append(f'{path}\n{format_metrics(metrics)}')
    return '\n\n'.join(blocks)


def create_eval_interface():
    with gr.Blocks() as interface:
        eval_readme_text = '''
                This tab scores checkpoints on a dataset (the test split when you give a folder) and
                builds one accuracy table for all of them.
            '''
        gr.Markdown(label='What is this tab about?', value=eval_readme_text)

        with gr.Row(equal_height=True):
            with gr.Column():
                data = gr.Textbox(label='Data', info='Folder with test.jsonl, or one JSONL file')
                checkpoints = gr.Textbox(label='Checkpoints', lines=4, info='One checkpoint.json path per line')
                out_folder = gr.Textbox(label='Output Folder', info='Optional: where accuracy.tsv is written')
                submit_button = gr.Button('Evaluate')

            with gr.Column():
                out = gr.TextArea(label='Output Console')

        submit_button.click(fn=evaluate_checkpoints, inputs=[data, checkpoints, out_folder], outputs=out)

    return interface
