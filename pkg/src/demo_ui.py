import gradio as gr

import pipeline_utils
from errors import RqaError


def classify_answer(checkpoint, question, options, answer):
    """
        Classify one answer to `question` and return the console text.
    """
    option_list = [option for option in (options or '').split(',') if option.strip()] or None
    try:
        session = pipeline_utils.DemoSession(checkpoint, question, option_list)
        result = session.classify(answer)
    except (RqaError, OSError) as e:
        return f'Error: {e}'

    return f'Q: {question}\nA: {answer}\n\n{session.format(result)}'


def create_demo_interface():
    with gr.Blocks() as interface:
        demo_readme_text = '''
                This tab plays the reverse-QA loop: the machine asks a question, you answer, the model
                says what your answer means. For a multiple-choice model, list the options (each must
                appear in the question), separated by commas.
            '''
        gr.Markdown(label='What is this tab about?', value=demo_readme_text)

        with gr.Row(equal_height=True):
            with gr.Column():
                checkpoint = gr.Textbox(label='Checkpoint', info='Path to a checkpoint.json')
                question = gr.Textbox(label='Question', value='do you like running')
                options = gr.Textbox(label='Options', info='Multiple choice only, e.g. coffee, tea')
                answer = gr.Textbox(label='Your answer')
                submit_button = gr.Button('Classify')

            with gr.Column():
                out = gr.TextArea(label='Output Console')

        submit_button.click(fn=classify_answer, inputs=[checkpoint, question, options, answer], outputs=out)
        answer.submit(fn=classify_answer, inputs=[checkpoint, question, options, answer], outputs=out)

    return interface
