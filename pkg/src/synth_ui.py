import gradio as gr

import pipeline_utils
from errors import RqaError


def generate_data(task, n_train, n_test, seed, out_folder):
    """
        Write a synthetic corpus and return the console text.
    """
    try:
        paths = pipeline_utils.gensynth_main(task, int(n_train), int(n_test), int(seed), out_folder)
    except (RqaError, OSError) as e:
        return f'Error: {e}'

    return '\n'.join(f'Wrote {path}' for path in paths)


def create_synth_interface():
    with gr.Blocks() as interface:
        synth_readme_text = '''
                This tab writes a template-based corpus (train.jsonl and test.jsonl) to try the models
                without a labelled dataset. The same seed always writes the same files.
            '''
        gr.Markdown(label='What is this tab about?', value=synth_readme_text)

        with gr.Row(equal_height=True):
            with gr.Column():
                task = gr.Radio(label='Question type', choices=['tf', 'mc'], value='tf')
                n_train = gr.Number(label='Training rows', value=2000, precision=0)
                n_test = gr.Number(label='Test rows', value=500, precision=0)
                seed = gr.Number(label='Seed', value=7, precision=0)
                out_folder = gr.Textbox(label='Output folder', info='Folder receiving train.jsonl and test.jsonl')
                submit_button = gr.Button('Generate')

            with gr.Column():
                out = gr.TextArea(label='Output Console')

        submit_button.click(fn=generate_data, inputs=[task, n_train, n_test, seed, out_folder], outputs=out)

    return interface
