import gradio as gr


def create_readme_interface():
    with gr.Blocks() as interface:

        with gr.Tab('Welcome'):
            welcome_text = '''
                # **Reverse-QA answer understanding**

                In a reverse-QA dialogue the machine asks and the human answers. A survey bot asks
                "do you like running?" and has to decide whether "a little" means yes, whether "i was a
                teacher last year" means no, and whether "you guess" means nothing at all.

                This tool trains and compares classifiers for that decision:

                > **T/F questions**: every answer is False, True or Uncertain.

                > **Multiple-choice questions** ("would you like coffee or tea?"): every option is
                  classified on its own, then the options are combined into the final answer
                  ({coffee}, {coffee, tea}, Null or Uncertain).

                The attention models (Semi-IAN and IAN+) read the question and the answer with two
                bi-directional LSTMs. Each word also carries a small keyword feature (its lexicon
                classes) and, for multiple choice, a marker of the option under consideration.
            '''
            gr.Markdown(value=welcome_text)

        with gr.Tab('How to use'):
            use_text = '''
                # **How to use**

                1. **Generate data**: write a synthetic train/test corpus, or bring your own JSONL files.
                   T/F rows are `{"id", "question", "answer", "label"}` with label 0 (False), 1 (True)
                   or 2 (Uncertain). Multiple-choice rows are `{"id", "question", "options", "answer",
                   "labels"}` with one label per option; every option must appear in the question.
                2. **Train**: pick a model and its settings. The checkpoint and a metrics table are
                   written into the output folder.
                3. **Evaluate**: score one or more checkpoints on a test file. The accuracy table can be
                   compared across models.
                4. **Demo**: load a checkpoint, ask a question and type answers.

                The same steps are available on the command line: `python main.py --help`.
            '''
            gr.Markdown(value=use_text)

    return interface
